"""
JSON serializer for run configurations and reports.
"""

import json
import os
from dataclasses import asdict
from typing import Any, Dict, Optional

from petforge.core.errors import ConfigurationError


class JSONSerializer:
    """Handles JSON serialization and deserialization of lab documents."""

    @staticmethod
    def save_to_file(data: Any, file_path: str):
        """Save data to a JSON file, creating parent directories."""
        directory = os.path.dirname(file_path)
        if directory:
            os.makedirs(directory, exist_ok=True)

        if hasattr(data, 'to_dict'):
            data = data.to_dict()
        elif hasattr(data, '__dataclass_fields__'):
            data = asdict(data)

        with open(file_path, 'w', encoding='utf-8') as f:
            json.dump(data, f, indent=2, ensure_ascii=False)

    @staticmethod
    def load_from_file(file_path: str) -> Optional[Dict[str, Any]]:
        """Load a JSON document; None when the file does not exist."""
        if not os.path.exists(file_path):
            return None
        try:
            with open(file_path, 'r', encoding='utf-8') as f:
                return json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"{file_path} is not valid JSON: {e}") from e
