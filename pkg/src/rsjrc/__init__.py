"""Joint radar-communication precoder design with rate splitting under coarse DACs."""

from .admm import Solution, build_split_operators, dual_update, evaluate, residuals, run
from .comms import (RateAllocation, common_sinr, effective_noise_variance,
                    objective_sum_rate, private_sinr, stream_rates)
from .quantization import (QuantizationModel, apply_linear_model,
                           apply_uniform_quantizer, dac_power,
                           precoder_power_budget, quantization_noise_variance,
                           resolution_delta)
from .radar import (beampattern_error, achieved_pattern, nmse, optimal_alpha,
                    transmit_covariance)
from .scenario import (AngleGrid, ChannelSet, SystemConfig,
                       desired_beampattern, generate_rayleigh_channels,
                       load_config, make_angle_grid, steering_vector)

__version__ = "0.1.0"
