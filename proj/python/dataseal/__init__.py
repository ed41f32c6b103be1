"""Keyed checksum verification for outsourced homomorphic matrix computation."""

from ._core import (
    DataSealError,
    LayerRejected,
    Matrix,
    Modulus,
    Verdict,
    VerificationKey,
    demo_cnn,
    derive_keys,
    encode_add,
    encode_mul,
    encode_poly,
    forgery_game,
    mat_add,
    mat_mul,
    mat_pow_elementwise,
    run_campaign,
    run_job,
    verify_add,
    verify_mul,
    verify_poly,
)

__all__ = [
    "DataSealError",
    "LayerRejected",
    "Matrix",
    "Modulus",
    "Verdict",
    "VerificationKey",
    "demo_cnn",
    "derive_keys",
    "encode_add",
    "encode_mul",
    "encode_poly",
    "forgery_game",
    "mat_add",
    "mat_mul",
    "mat_pow_elementwise",
    "run_campaign",
    "run_job",
    "verify_add",
    "verify_mul",
    "verify_poly",
]
