"""Tensors on the reverse-mode tape: forward ops, backward, and checking
every gradient against central finite differences."""

import numpy as np

from wavegraph import numcore as nc
from wavegraph.numcore import Adam, DenseLayer, Tensor, backward, grad_check

# a tiny two-layer network on the tape
rng = np.random.default_rng(0)
hidden = DenseLayer(2, 8, "tanh", rng)
out = DenseLayer(8, 1, "sigmoid", rng)

x = Tensor(rng.normal(size=(16, 2)))
target = (x.data[:, :1] * x.data[:, 1:] > 0).astype(float)  # XOR-ish

loss = nc.cross_entropy_loss(out(hidden(x)), target, np.ones((16, 1)))
print(f"initial loss: {loss.item():.4f}")
backward(loss)
print(f"gradient wrt hidden bias: {hidden.bias.grad.round(4)}")

# the tape rejects a second backward pass on the same result
try:
    backward(loss)
except RuntimeError as err:
    print(f"re-running backward: {err}")

# every gradient matches central differences
params = [("hidden." + n, t) for n, t in hidden.parameters()]
params += [("out." + n, t) for n, t in out.parameters()]


def fresh_loss():
    return nc.cross_entropy_loss(out(hidden(x)), target, np.ones((16, 1)))


report = grad_check(fresh_loss, params)
print(f"\ngrad check, max relative error: {report.max_rel_error:.2e}")

# a few Adam steps drive the loss down
opt = Adam(params, lr=1e-2)
for step in range(200):
    loss = fresh_loss()
    backward(loss)
    opt.step()
    opt.zero_grad()
    if step % 50 == 0 or step == 199:
        print(f"step {step:3d}: loss {loss.item():.4f}")
