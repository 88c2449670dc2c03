"""Multi-model score-diffusion k-space MRI reconstruction toolkit."""

from .errors import (BadMagicError, DimensionOverflowError, GridFileError,
                     KdiffError, MlpDimensionError, MlpFormatError,
                     MlpMagicError, MlpValueError, TruncatedPayloadError,
                     ValidationError)
from .grids import (CoilStack, ComplexGrid, Domain, fft2c, grid_center,
                    ifft2c, sos_combine)
from .gridio import read_grid, write_grid
from .masks import (EntropyReport, MaskShape, Relation, VirtualMask, entropy,
                    entropy_report, make_circle_mask, make_radial_mask,
                    make_random_mask, make_random_mask_pair, relationship)
from .metrics import MetricReport, evaluate, psnr, ssim
from .patterns import (Measurement, PatternKind, SamplingPattern,
                       apply_forward, gen_poisson2d, gen_random2d,
                       gen_uniform, poisson_local_radius)
from .recon import (Combination, Identity, LevelDiag, Masked, ModelSlot,
                    ReconConfig, ReconResult, Role, Weighted,
                    cascade_reconstruct, corrector_step, data_consistency,
                    kdiff_threads, parallel_reconstruct, pc_sample,
                    predictor_step, reconstruct, reconstruct_many)
from .runconfig import RunConfig, SlotSpec, load_config, parse_config
from .scores import (FunctionScore, GaussianPrior, GaussianScore, MlpLayer,
                     MlpScore, MlpScoreWeights, NoiseSchedule, ScoreProvider,
                     ZeroScore, complex_normal, dsm_loss, gaussian_score,
                     load_mlp, make_schedule, parse_mlp_weights, perturb,
                     read_mlp_weights, save_mlp)
from .weighting import WeightMatrix, apply_weight, make_weight, unweight

__version__ = "0.1.0"
