"""stegotrace: signed identity watermarking, harm gating, and attribution.

Five embedding schemes (LSB, DCT parity, DWT parity, spatial spread
spectrum, DWT-LL spread spectrum) carry an RSA-signed user identifier or
its 32-bit fingerprint; a multimodal fusion classifier over frozen
image/text embeddings gates identity verification for flagged content.
"""

__version__ = "0.1.0"
