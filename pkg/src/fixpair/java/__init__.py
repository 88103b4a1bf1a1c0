from .tokenizer import Token, TokenStream, tokenize
from .structure import SourceElement, parse_elements

__all__ = ["Token", "TokenStream", "tokenize", "SourceElement", "parse_elements"]
