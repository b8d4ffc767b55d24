from .checkpoint import load_checkpoint, save_checkpoint
from .layers import (arma_conv_forward, arma_stack_forward, cheb_conv_forward,
                     chebyshev_basis, dropout, gcn_conv_forward, glorot_uniform)
from .model import (ForwardResult, ModelParams, ModelSpec, backward, init_params,
                    joint_loss, loss_and_gradients, model_forward, trainable_keys)
from .optim import AdamState, adam_step
