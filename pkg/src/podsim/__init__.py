"""Precoder codebook design and link simulation for partly orthogonal
space-time codes driven by noisy quantized feedback."""

from podsim.channel import (
    ChannelDims,
    ChannelRealization,
    complex_gaussian,
    sample_channel,
    sample_direction,
    sample_directions,
)
from podsim.codebook import (
    CodebookError,
    PrecoderCodebook,
    eigen_profile,
    hermitian_psd_part,
    load_codebook,
    project_psd_power,
    save_codebook,
)
from podsim.feedback import (
    AnnealSchedule,
    FeedbackChannel,
    bsc_inversion_matrix,
    chordal_distance_sq,
    dominant_directions,
    load_mapping,
    mapping_cost,
    optimize_mapping,
    save_mapping,
)
from podsim.link import (
    BER_CSV_HEADER,
    BerResult,
    SimulationConfig,
    candidate_codewords,
    effective_channel,
    ml_decode,
    noise_variance,
    run_ber_sweep,
    transmit_block,
    write_ber_csv,
)
from podsim.pep import (
    EvaluationSet,
    IntegralCheckReport,
    PepContext,
    average_pep_bound,
    build_evaluation_set,
    closed_form_integrals_check,
    conditional_pep_bound,
    region_pep_bound,
)
from podsim.stbc import (
    Constellation,
    InnerDesign,
    PodStructure,
    assemble,
    design_kinds,
    get_design,
    gray_code,
    slot_alphabets,
    worst_case_distance,
)
from podsim.trainer import (
    TrainerConfig,
    TrainingState,
    encode,
    encode_batch,
    eta_c_from_snr_db,
    fit,
    gradient,
    objective,
    train,
    train_average,
    train_worst_case,
)

__all__ = [
    "AnnealSchedule",
    "BER_CSV_HEADER",
    "BerResult",
    "ChannelDims",
    "ChannelRealization",
    "CodebookError",
    "Constellation",
    "EvaluationSet",
    "FeedbackChannel",
    "InnerDesign",
    "IntegralCheckReport",
    "PepContext",
    "PodStructure",
    "PrecoderCodebook",
    "SimulationConfig",
    "TrainerConfig",
    "TrainingState",
    "assemble",
    "average_pep_bound",
    "bsc_inversion_matrix",
    "build_evaluation_set",
    "candidate_codewords",
    "chordal_distance_sq",
    "closed_form_integrals_check",
    "complex_gaussian",
    "conditional_pep_bound",
    "design_kinds",
    "dominant_directions",
    "effective_channel",
    "eigen_profile",
    "encode",
    "encode_batch",
    "eta_c_from_snr_db",
    "fit",
    "get_design",
    "gradient",
    "gray_code",
    "hermitian_psd_part",
    "load_codebook",
    "load_mapping",
    "mapping_cost",
    "ml_decode",
    "noise_variance",
    "objective",
    "optimize_mapping",
    "project_psd_power",
    "region_pep_bound",
    "run_ber_sweep",
    "sample_channel",
    "sample_direction",
    "sample_directions",
    "save_codebook",
    "save_mapping",
    "slot_alphabets",
    "train",
    "train_average",
    "train_worst_case",
    "transmit_block",
    "worst_case_distance",
    "write_ber_csv",
]

__version__ = "0.1.0"
