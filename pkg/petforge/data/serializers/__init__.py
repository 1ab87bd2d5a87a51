"""
Data serializers package.
"""

from .csv_serializer import CSVSerializer
from .json_serializer import JSONSerializer
from .petw_serializer import PetwSerializer

__all__ = ['CSVSerializer', 'JSONSerializer', 'PetwSerializer']
