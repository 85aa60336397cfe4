from .signature_builder import (
    SignatureMatrix,
    ZoneCounts,
    ZoneSignature,
    build_matrix,
    exterior_share,
    signature_of,
    signatures_from_permits,
    tally,
)
from .signature_io import read_signatures, write_signatures
