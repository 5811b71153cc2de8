"""
The concepts-to-sentence model: encoder, fusion and recurrent memories,
decoder/reconstructor and the training objectives.
"""

from model.vocabulary import ConceptSet, Vocabulary
from model.seq2seq import BeamResult, DecodeTrace, R2MModel

__all__ = ["BeamResult", "ConceptSet", "DecodeTrace", "R2MModel", "Vocabulary"]
