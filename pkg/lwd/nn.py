# LwD -- tensor kernels with reverse-mode gradients
# -*- Mode: python; tab-width: 4; indent-tabs-mode:nil; coding: utf-8 -*-
# vim: tabstop=4 expandtab shiftwidth=4 softtabstop=4
#
# LwD-Solver --- deferred-decision policies for locally decomposable graph problems
# Released under the GNU Public Licence, version 3
"""
Minimal neural network kernels --- :mod:`lwd.nn`
================================================

Just enough reverse-mode automatic differentiation for the GraphSAGE
policy/value networks and the PPO loss.

A :class:`Tape` records every :class:`Tensor` produced by a primitive
in creation order, which is a topological order of the computation;
:meth:`Tape.backward` visits the recorded nodes in reverse and each node
adds its contribution to the gradients of its inputs. Tensors have rank
0, 1 or 2 and their shapes must match exactly; there is no implicit
broadcasting. Mismatches raise :exc:`ShapeError` naming the primitive
and both shapes.

Parameters live in a :class:`ParamStore` together with their gradients
and Adam moments. :meth:`ParamStore.tensor` hands out leaf tensors whose
gradient *is* the store's gradient buffer, so a backward pass fills the
store directly. Updates are done by :func:`clip_grad_norm` followed by
:func:`adam_step`.

Primitives
----------

:func:`matmul`, :func:`add`, :func:`sub`, :func:`mul`, :func:`scale`,
:func:`relu`, :func:`exp`, :func:`log`, :func:`square`,
:func:`row_softmax`, :func:`log_softmax`, :func:`spmm`,
:func:`segment_sum`, :func:`row_sum_pool`, :func:`pick`, :func:`clip`,
:func:`where`, :func:`reshape`, :func:`tsum`, :func:`mean`.

Gradient checks
---------------

:func:`grad_check` compares the backward pass with central differences.
In float32 the difference quotient at ``eps = 1e-3`` is only good to
:func:`roundoff_atol`; coordinates below that floor cannot be judged
relatively and are accepted. :func:`gradients` returns the analytic
gradients at a chosen precision, so the float32 backward pass can also
be compared with the float64 one directly.
"""
import numpy
import scipy.sparse

from . import bpio
from .bpio import CheckpointError

import logging
logger = logging.getLogger("lwd.nn")

__all__ = ['ShapeError', 'CheckpointError', 'Tensor', 'Tape', 'ParamStore',
           'gradients', 'grad_check', 'roundoff_atol', 'adam_step', 'clip_grad_norm']


class ShapeError(ValueError):
    """Operand shapes of a primitive do not fit."""


def _shape_error(op, a, b):
    errmsg = "%s: incompatible shapes %s and %s" % (op, tuple(a), tuple(b))
    logger.error(errmsg)
    raise ShapeError(errmsg)


class Tape(object):
    """Record of the primitives applied in one forward pass."""
    def __init__(self):
        self.nodes = []

    def record(self, node):
        self.nodes.append(node)
        return node

    def backward(self, root):
        """Accumulate d(root)/d(x) into every tensor that requires a gradient."""
        if root.value.size != 1:
            _shape_error("backward (scalar root)", root.shape, ())
        _accumulate(root, numpy.ones_like(root.value))
        for node in reversed(self.nodes):
            if node.grad is not None and node._backward is not None:
                node._backward(node.grad)

    def __len__(self):
        return len(self.nodes)


class Tensor(object):
    """Array of rank <= 2 on a tape.

    *grad* collects the gradient after :meth:`Tape.backward`; tensors
    with ``requires_grad=False`` (inputs, constants) never receive one.
    """
    __slots__ = ('value', 'grad', 'requires_grad', 'tape', '_backward')

    def __init__(self, value, tape=None, requires_grad=False, grad=None):
        value = numpy.asarray(value)
        if value.ndim > 2:
            raise ShapeError("tensors have rank <= 2, got shape %s" % (value.shape,))
        self.value = value
        self.tape = tape
        self.requires_grad = requires_grad
        self.grad = grad
        self._backward = None

    @property
    def shape(self):
        return self.value.shape

    @property
    def dtype(self):
        return self.value.dtype

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        if isinstance(other, Tensor):
            return mul(self, other)
        return scale(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __float__(self):
        return float(self.value)

    def __repr__(self):
        return "<Tensor shape=%s dtype=%s%s>" % (self.shape, self.value.dtype,
                                                 " requires_grad" if self.requires_grad else "")


def constant(value, tape=None, dtype=None):
    """Wrap an array as a tensor without gradient."""
    return Tensor(numpy.asarray(value, dtype=dtype), tape=tape)


def _accumulate(t, g):
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = numpy.array(g, dtype=t.value.dtype).reshape(t.shape)
    else:
        t.grad += numpy.reshape(g, t.shape)


def _result(value, inputs, backward):
    """Create the output tensor of a primitive and put it on the tape."""
    tape = None
    for t in inputs:
        if t.tape is not None:
            tape = t.tape
            break
    out = Tensor(value, tape=tape, requires_grad=any(t.requires_grad for t in inputs))
    if out.requires_grad:
        out._backward = backward
        if tape is not None:
            tape.record(out)
    return out


def _same_shape(op, a, b):
    if a.shape != b.shape:
        _shape_error(op, a.shape, b.shape)


def matmul(a, b):
    """Dense matrix product of two rank-2 tensors."""
    if a.value.ndim != 2 or b.value.ndim != 2 or a.shape[1] != b.shape[0]:
        _shape_error("matmul", a.shape, b.shape)

    def backward(g):
        _accumulate(a, g.dot(b.value.T))
        _accumulate(b, a.value.T.dot(g))
    return _result(a.value.dot(b.value), (a, b), backward)


def add(a, b):
    _same_shape("add", a, b)

    def backward(g):
        _accumulate(a, g)
        _accumulate(b, g)
    return _result(a.value + b.value, (a, b), backward)


def sub(a, b):
    _same_shape("sub", a, b)

    def backward(g):
        _accumulate(a, g)
        _accumulate(b, -g)
    return _result(a.value - b.value, (a, b), backward)


def mul(a, b):
    """Elementwise product."""
    _same_shape("mul", a, b)

    def backward(g):
        _accumulate(a, g * b.value)
        _accumulate(b, g * a.value)
    return _result(a.value * b.value, (a, b), backward)


def scale(a, c):
    """Multiply by the constant scalar *c*."""
    c = float(c)

    def backward(g):
        _accumulate(a, g * c)
    return _result(a.value * numpy.asarray(c, dtype=a.value.dtype), (a,), backward)


def relu(a):
    mask = a.value > 0

    def backward(g):
        _accumulate(a, g * mask)
    return _result(numpy.where(mask, a.value, 0).astype(a.value.dtype), (a,), backward)


def exp(a):
    y = numpy.exp(a.value)

    def backward(g):
        _accumulate(a, g * y)
    return _result(y, (a,), backward)


def log(a):
    def backward(g):
        _accumulate(a, g / a.value)
    return _result(numpy.log(a.value), (a,), backward)


def square(a):
    def backward(g):
        _accumulate(a, 2 * g * a.value)
    return _result(a.value * a.value, (a,), backward)


def _softmax(x):
    z = numpy.exp(x - x.max(axis=1, keepdims=True))
    return z / z.sum(axis=1, keepdims=True)


def row_softmax(a):
    """Softmax of every row of a rank-2 tensor."""
    if a.value.ndim != 2:
        _shape_error("row_softmax", a.shape, ("n", "c"))
    y = _softmax(a.value)

    def backward(g):
        _accumulate(a, y * (g - (g * y).sum(axis=1, keepdims=True)))
    return _result(y, (a,), backward)


def log_softmax(a):
    """Row-wise log-softmax (stable for large logits)."""
    if a.value.ndim != 2:
        _shape_error("log_softmax", a.shape, ("n", "c"))
    shifted = a.value - a.value.max(axis=1, keepdims=True)
    y = shifted - numpy.log(numpy.exp(shifted).sum(axis=1, keepdims=True))

    def backward(g):
        _accumulate(a, g - numpy.exp(y) * g.sum(axis=1, keepdims=True))
    return _result(y, (a,), backward)


def spmm(adj, h):
    """Product of a constant sparse matrix with a dense tensor.

    *adj* is a :class:`~lwd.graph.NormalizedAdjacency` or a scipy sparse
    matrix.
    """
    matrix = getattr(adj, 'matrix', adj)
    if matrix.shape[1] != h.shape[0]:
        _shape_error("spmm", matrix.shape, h.shape)
    transposed = matrix.T.tocsr()

    def backward(g):
        _accumulate(h, transposed.dot(g))
    value = numpy.asarray(matrix.dot(h.value)).astype(
        numpy.result_type(h.value.dtype, numpy.float32))
    return _result(value, (h,), backward)


def pooling_matrix(sizes, dtype=numpy.float32):
    """Sparse (len(sizes), sum(sizes)) matrix summing consecutive row segments."""
    sizes = numpy.asarray(sizes, dtype=numpy.int64)
    rows = numpy.repeat(numpy.arange(len(sizes)), sizes)
    cols = numpy.arange(int(sizes.sum()))
    return scipy.sparse.csr_matrix((numpy.ones(len(cols), dtype=dtype), (rows, cols)),
                                   shape=(len(sizes), len(cols)))


def segment_sum(h, sizes):
    """Sum consecutive row segments of lengths *sizes* (batched readout)."""
    if int(numpy.sum(sizes)) != h.shape[0]:
        _shape_error("segment_sum", h.shape, (int(numpy.sum(sizes)),))
    return spmm(pooling_matrix(sizes, dtype=h.value.dtype), h)


def row_sum_pool(h):
    """Sum over all rows: (n, d) -> (1, d)."""
    return segment_sum(h, [h.shape[0]])


def pick(a, index):
    """Row-wise selection ``a[i, index[i]]`` of a rank-2 tensor -> rank 1."""
    index = numpy.asarray(index, dtype=numpy.int64)
    if a.value.ndim != 2 or index.shape != (a.shape[0],):
        _shape_error("pick", a.shape, index.shape)
    rows = numpy.arange(a.shape[0])

    def backward(g):
        full = numpy.zeros_like(a.value)
        full[rows, index] = g
        _accumulate(a, full)
    return _result(a.value[rows, index], (a,), backward)


def clip(a, lo, hi):
    """Clamp to [lo, hi]; the gradient is zero outside the interval."""
    inside = (a.value >= lo) & (a.value <= hi)

    def backward(g):
        _accumulate(a, g * inside)
    return _result(numpy.clip(a.value, lo, hi).astype(a.value.dtype), (a,), backward)


def where(cond, a, b):
    """Elementwise choice between *a* (where *cond*) and *b*; *cond* is constant."""
    _same_shape("where", a, b)
    cond = numpy.asarray(cond, dtype=bool)
    if cond.shape != a.shape:
        _shape_error("where (condition)", cond.shape, a.shape)

    def backward(g):
        _accumulate(a, g * cond)
        _accumulate(b, g * ~cond)
    return _result(numpy.where(cond, a.value, b.value), (a, b), backward)


def reshape(a, shape):
    old = a.shape

    def backward(g):
        _accumulate(a, numpy.reshape(g, old))
    try:
        value = a.value.reshape(shape)
    except ValueError:
        _shape_error("reshape", a.shape, shape)
    return _result(value, (a,), backward)


def tsum(a):
    """Sum of all entries -> scalar tensor."""
    def backward(g):
        _accumulate(a, numpy.broadcast_to(g, a.shape))
    return _result(numpy.asarray(a.value.sum(), dtype=a.value.dtype), (a,), backward)


def mean(a):
    """Mean of all entries -> scalar tensor."""
    return scale(tsum(a), 1.0 / max(1, a.value.size))


def backward(root):
    """Run the backward pass of the tape *root* was recorded on."""
    if root.tape is None:
        raise ValueError("tensor %r was not recorded on a tape" % (root,))
    root.tape.backward(root)


class ParamStore(object):
    """Named parameter arrays with gradients and Adam state.

    Iteration yields the names in insertion order, which is also the
    order of a checkpoint.

    :Attributes:
       *values*, *grads*, *m*, *v*
          dicts name -> array (identical shapes per name)
       *step*
          number of Adam steps taken
    """
    def __init__(self, dtype=numpy.float32):
        self.dtype = numpy.dtype(dtype)
        self.values = {}
        self.grads = {}
        self.m = {}
        self.v = {}
        self.step = 0

    def add(self, name, value):
        if name in self.values:
            raise ValueError("parameter %r already exists" % (name,))
        value = numpy.array(value, dtype=self.dtype)
        if value.ndim > 2:
            raise ShapeError("parameter %r has rank %d > 2" % (name, value.ndim))
        self.values[name] = value
        self.grads[name] = numpy.zeros_like(value)
        self.m[name] = numpy.zeros_like(value)
        self.v[name] = numpy.zeros_like(value)
        return value

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)

    def __contains__(self, name):
        return name in self.values

    def __getitem__(self, name):
        return self.values[name]

    def tensor(self, name, tape):
        """Leaf tensor of parameter *name*; its gradient is the store's buffer."""
        return Tensor(self.values[name], tape=tape, requires_grad=True,
                      grad=self.grads[name])

    def zero_grad(self):
        for g in self.grads.values():
            g[...] = 0

    def num_parameters(self):
        return int(sum(a.size for a in self.values.values()))

    def grad_norm(self):
        """Global L2 norm of all gradients (accumulated in float64)."""
        return float(numpy.sqrt(sum(numpy.sum(numpy.square(g, dtype=numpy.float64))
                                    for g in self.grads.values())))

    def copy(self, dtype=None):
        """Copy of the parameter values (fresh gradients and moments)."""
        other = ParamStore(dtype=self.dtype if dtype is None else dtype)
        for name, value in self.values.items():
            other.add(name, value)
        return other

    def state_dict(self):
        return dict((name, value.copy()) for name, value in self.values.items())

    def load_state_dict(self, params):
        """Replace the values by *params*; names and shapes must match exactly.

        :Raises: :exc:`CheckpointError`
        """
        missing = [name for name in self.values if name not in params]
        extra = [name for name in params if name not in self.values]
        if missing or extra:
            errmsg = "checkpoint parameters do not match the model (missing %s, unexpected %s)" % (
                missing, extra)
            logger.fatal(errmsg)
            raise CheckpointError(errmsg)
        for name, value in params.items():
            if numpy.shape(value) != self.values[name].shape:
                errmsg = "parameter %r has shape %s in the checkpoint, model expects %s" % (
                    name, numpy.shape(value), self.values[name].shape)
                logger.fatal(errmsg)
                raise CheckpointError(errmsg)
        for name, value in params.items():
            self.values[name][...] = value

    def save(self, filename):
        return bpio.write_checkpoint(filename, self.values)

    def load(self, filename):
        self.load_state_dict(bpio.read_checkpoint(filename))
        return self

    def __repr__(self):
        return "<ParamStore %d arrays, %d parameters>" % (len(self), self.num_parameters())


def adam_step(store, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-8):
    """One Adam update with bias correction, in place."""
    store.step += 1
    t = store.step
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    for name, value in store.values.items():
        g = store.grads[name]
        m, v = store.m[name], store.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        update = lr * (m / c1) / (numpy.sqrt(v / c2) + eps)
        value -= update.astype(value.dtype)


def clip_grad_norm(store, max_norm=0.5):
    """Rescale all gradients jointly so that their global norm is at most *max_norm*.

    :Returns: the global norm before clipping
    """
    total = store.grad_norm()
    if total > max_norm:
        factor = max_norm / total
        for g in store.grads.values():
            g *= factor
    return total


def gradients(f, store, dtype=None):
    """Analytic gradients of *f* evaluated on a copy of *store* cast to *dtype*.

    :Returns: ``(work, value)``, the evaluated copy (its :attr:`grads`
              hold the gradients) and the loss value as a float
    """
    work = store.copy(dtype=dtype)
    work.zero_grad()
    loss = f(work)
    backward(loss)
    return work, float(loss.value)


def roundoff_atol(scale, eps, dtype=numpy.float32, factor=16):
    """Absolute error floor of a central difference computed in *dtype*.

    Each of the two loss evaluations carries a round-off of about
    ``factor * finfo(dtype).eps * max(|scale|, 1)``; the difference
    quotient divides that by the step *eps*.
    """
    return factor * numpy.finfo(dtype).eps * max(abs(scale), 1.0) / eps


def grad_check(f, store, eps=1e-3, dtype=numpy.float64, max_coords=None, rng=None,
               atol=0.0, one_sided=False):
    """Compare analytic gradients of *f* with central finite differences.

    *f(store)* must build its computation on a fresh :class:`Tape` from
    ``store.tensor(...)`` leaves and return the scalar loss tensor. The
    check runs on a copy of *store* cast to *dtype* (float64 unless a
    float32 check is asked for). The difference quotient uses the steps
    actually taken after rounding ``x +/- eps`` to *dtype*.

    The relative error of a coordinate is
    ``|g_a - g_n| / max(1e-8, |g_a| + |g_n|)``. A coordinate whose
    absolute error ``|g_a - g_n|`` is at most *atol* counts as exact; in
    float32 pass :func:`roundoff_atol`, below which the finite difference
    carries no information. With *one_sided* a coordinate also passes on
    the better of the forward and backward differences (a ReLU kink
    inside ``[x - eps, x + eps]`` spoils the central one only). With
    *max_coords* only that many randomly chosen coordinates per parameter
    array are checked.

    :Returns: maximum relative error over the checked coordinates
    """
    work, f0 = gradients(f, store, dtype=dtype)
    analytic = dict((name, g.copy()) for name, g in work.grads.items())
    rng = numpy.random.default_rng(0) if rng is None else rng

    def relative(ga, gn):
        diff = abs(ga - gn)
        if diff <= atol:
            return 0.0
        return diff / max(1e-8, abs(ga) + abs(gn))

    worst = 0.0
    for name, value in work.values.items():
        flat = value.reshape(-1)
        coords = numpy.arange(flat.size)
        if max_coords is not None and flat.size > max_coords:
            coords = numpy.sort(rng.choice(flat.size, size=max_coords, replace=False))
        ga_flat = analytic[name].reshape(-1)
        for k in coords:
            orig = flat[k]
            flat[k] = orig + eps
            hp = float(flat[k]) - float(orig)
            fp = float(f(work).value)
            flat[k] = orig - eps
            hm = float(orig) - float(flat[k])
            fm = float(f(work).value)
            flat[k] = orig
            ga = float(ga_flat[k])
            err = relative(ga, (fp - fm) / (hp + hm))
            if one_sided and err > 0.0:
                err = min(err, relative(ga, (fp - f0) / hp), relative(ga, (f0 - fm) / hm))
            if err > worst:
                worst = err
    logger.debug("grad_check(%s): max relative error %.3g", numpy.dtype(dtype).name, worst)
    return worst
