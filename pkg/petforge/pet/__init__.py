"""
PET package - method specs, adapters, prompts, LoRA, gates and per-forward context.
Parameter accounting lives in petforge.pet.accounting (it builds whole models).
"""

from .method import METHODS, MethodSpec
from .adapters import HoulsbyAdapter, InnerAdapter, InterAdapter
from .prompts import PromptBank
from .lora import LoraPair
from .gates import GateBank
from .context import LayerPet, PetContext, PetModules

__all__ = [
    'METHODS',
    'MethodSpec',
    'HoulsbyAdapter',
    'InnerAdapter',
    'InterAdapter',
    'PromptBank',
    'LoraPair',
    'GateBank',
    'LayerPet',
    'PetContext',
    'PetModules'
]
