"""oversmooth: a laboratory for measuring and mitigating over-smoothing in
graph message passing."""

from .graph import (Graph, barbell, build_from_edges, combinatorial_laplacian,
                    complete, connected_components, generate, graph_hash,
                    grid2d, induced_subgraph, normalized_operator, ring,
                    spectral_radius, star)
from .measures import (AxiomReport, component_sum_measure, dirichlet_energy,
                       dirichlet_measure, mad, measure_by_name, verify_axioms)
from .series import DecayFit, MeasureSeries, fit_decay
from .layers import (GraphconState, LayerParams, dropedge_sample, g2_step,
                     gat_step, gcn_step, gcnii_step, graphcon_step, identity,
                     pairnorm_apply, relu, resgcn_step, sage_step)
from .harness import (MODELS, RunConfig, SweepRow, init_features,
                      init_weights, propagate_record, sweep)
from .autodiff import OpRecord, Tape
from .train import (EpochMetrics, ModelParams, TrainConfig, accuracy,
                    init_model, loss_and_grad, predict_logits, train,
                    trained_energy_profile)
from .ode import OdeConfig, detect_ct_oversmoothing, integrate_record
from .io import (load_graph, load_labels, load_splits, read_series,
                 write_fit_json, write_series)

__version__ = "0.1.0"
