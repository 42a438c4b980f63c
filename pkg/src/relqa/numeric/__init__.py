from relqa.numeric.gradcheck import GradCheckReport, gradient_check, relative_error
from relqa.numeric.kernels import (
    BACKEND,
    FilterBank,
    available_backends,
    conv1d_backward,
    conv1d_forward,
    encode_backward,
    encode_forward,
    get_backend,
    maxpool_backward,
    maxpool_rows,
    output_length,
)
from relqa.numeric.ops import (
    affine,
    affine_backward,
    bilinear,
    bilinear_backward,
    relu,
    relu_grad,
    softmax,
    softmax_nll,
)
