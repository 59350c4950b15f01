"""Task-driven visual scanpath generation and evaluation.

The package splits into three layers:

* perception and learning (torch): :mod:`~scanpaths.foveation` renders
  differentiable foveated views with a decaying memory, :mod:`~scanpaths.tasks`
  trains the frozen task models, :mod:`~scanpaths.attention` trains the
  fixation policy by backpropagating the task loss through the foveation;
* evaluation (numpy/scipy): :mod:`~scanpaths.baselines` provides random,
  center-bias, saliency + winner-take-all, and human leave-one-out reference
  generators; :mod:`~scanpaths.metrics` scores quantised scanpaths with string
  edit distance and a substring mismatch metric;
* experiment plumbing: :mod:`~scanpaths.data` defines the canonical CSV
  formats and the synthetic dataset, :mod:`~scanpaths.config`,
  :mod:`~scanpaths.cli`, and :mod:`~scanpaths.plotting` wrap everything into
  reproducible command-line runs.
"""

from .attention import (
    AttentionModel,
    AttentionNetwork,
    AttentionTrainConfig,
    first_fixation_quadrant_rate,
    generate_scanpath,
    load_attention_model,
    new_attention_model,
    next_fixation,
    rollout,
    rollout_loss,
    train_attention,
)
from .baselines import (
    SaliencyMap,
    center_scanpath,
    human_baseline,
    random_scanpath,
    saliency_itti_lite,
    wta_scanpath,
)
from .data import (
    DataError,
    EyeTrackingRecord,
    LabeledStimulus,
    LoadReport,
    Scanpath,
    denormalize_scanpath,
    load_fixations,
    load_image,
    load_images,
    load_scanpaths,
    make_synthetic_dataset,
    normalize_record,
    reference_scanpaths,
    save_image,
    write_fixations,
    write_scanpaths,
)
from .foveation import (
    FoveationConfig,
    PerceptualState,
    blur_stimulus,
    foveate,
    gaussian_blob,
    image_to_tensor,
    init_state,
    tensor_to_image,
    update_state,
)
from .metrics import (
    GridSpec,
    MetricRow,
    aggregate_mean,
    aggregate_spp,
    evaluate,
    quantize,
    sbtde,
    sed,
    summarize,
)
from .tasks import (
    TaskModel,
    TaskTrainConfig,
    load_task_model,
    task_loss,
    train_classifier,
    train_reconstructor,
)

__version__ = "0.1.0"
