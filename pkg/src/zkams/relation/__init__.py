from .circuit import ConstraintSystem, LC
from .client import ClientBundle, honest_client
from .gadgets import mimc_hash, schnorr_keygen, schnorr_sign, schnorr_verify
from .instances import (
    DEFAULT_COMMIT_SEED,
    CommittedRelaxedInstance,
    CommittedRelaxedWitness,
    ResCredential,
    c1_diagnostics,
    check_c1,
    client_generate,
    commit_setup_for,
    make_res_credential,
    random_ring_vector,
)
from .phc import (
    NUM_PUBLIC,
    X_HASH,
    X_PK_ISSUER,
    X_R_HOLDER,
    X_S_HOLDER,
    Holder,
    Issuer,
    Phc,
    build_phc_relation,
    holder_sign,
    native_check,
    phc_assignment,
    phc_hash,
    sample_phc,
)
from .r1cs import (
    R1CSShape,
    SparseMatrix,
    check_r1cs,
    check_relaxed,
    export_triplets,
    import_triplets,
    make_shape,
)
