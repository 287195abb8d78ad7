"""Vectorized reward evaluation for many parameter vectors at once.

This is the hot path of training: for each rollout angle vector θ_r and each
initial state |k>, compute r = |<k|V(θ_r)† U|k>|^2, optionally with shot
sampling and depolarizing trajectories.  Gate order matches
``adjoint(build_ansatz(spec, θ))`` applied after ``target.circuit`` exactly;
without noise the commuting RZZ gates of a layer are fused into one diagonal.
"""
from __future__ import annotations

import numpy as np

from . import kernels
from .ansatz import TargetUnitary, layer_params, param_count
from .sim import NoiseModel, SimulationError, ensure_rng

# rollouts per kernel call are capped so one chunk stays cache-sized
_CHUNK_BYTES = 1 << 21

_PAULI_MATS = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def _z_signs(n: int) -> np.ndarray:
    idx = np.arange(2**n)
    bits = (idx[:, None] >> (n - 1 - np.arange(n))) & 1
    return 1 - 2 * bits  # (dim, n), entries ±1


class _FaultDraws:
    """Pauli faults for one chunk, from one uniform per (site, rollout, column).

    A uniform u below p marks a fault; u / p is then uniform on [0, 1) and
    picks X, Y or Z through the cumulative Pauli weights.
    """

    def __init__(self, rng, noise: NoiseModel, sites: int, shape, strides):
        u = rng.random((sites,) + tuple(shape))
        hit = u < noise.p
        which = np.searchsorted(np.cumsum(noise.pauli_weights), u[hit] / noise.p, side="right")
        self.codes = np.zeros(u.shape, dtype=np.int8)
        self.codes[hit] = np.minimum(which, 2) + 1
        self.any_hit = hit.reshape(sites, -1).any(axis=1)
        self.strides = strides
        self.next = 0

    def apply(self, A, qubits):
        for q in qubits:
            site = self.next
            self.next += 1
            if self.any_hit[site]:
                kernels.pauli_batch(A, self.strides[q], self.codes[site])


class RolloutSimulator:
    """Per-state rewards for batches of ansatz parameters against one target.

    ``states`` is a (2**n, M) array whose columns are the initial states.
    ``shots=None`` returns exact overlap probabilities; an integer draws
    Binomial(shots, p)/shots, which is the distribution of the all-zeros
    frequency after inverting a preparation circuit.  With ``noise`` each
    (rollout, state) pair follows one fresh Pauli trajectory through U and
    V†; ``faults_per_shot`` instead resamples faults for every shot, which is
    evaluated exactly through the averaged channel (density matrices).
    """

    def __init__(self, target: TargetUnitary, states, shots: int | None = None,
                 noise: NoiseModel | None = None, faults_per_shot: bool = False):
        self.target = target
        self.spec = spec = target.spec
        self.n = n = spec.n_qubits
        self.dim = 2**n
        states = np.ascontiguousarray(np.asarray(states, dtype=np.complex128))
        if states.ndim == 1:
            states = states[:, None]
        if states.shape[0] != self.dim:
            raise ValueError(f"states have dimension {states.shape[0]}, expected {self.dim}")
        if shots is not None and shots < 1:
            raise ValueError("shots must be a positive integer or None")
        self.states = states
        self.shots = shots
        self.noise = noise if noise is not None and noise.active else None
        self.faults_per_shot = bool(faults_per_shot) and self.noise is not None
        self.d = param_count(spec)

        z = _z_signs(n)
        self._pair_signs = np.array([z[:, a] * z[:, b] for a, b in spec.pairs],
                                    dtype=float).reshape(len(spec.pairs), self.dim)
        self._strides = [1 << (n - 1 - q) for q in range(n)]
        per_rollout = self.dim * states.shape[1] * 16
        self._chunk = max(1, _CHUNK_BYTES // per_rollout)
        if self.noise is None:
            evolved = np.ascontiguousarray(states[None].copy())
            self._forward(evolved, np.asarray(target.hidden_params)[None])
            self._target_states = evolved[0]
        else:
            self._target_states = None

    @property
    def n_states(self) -> int:
        return self.states.shape[1]

    # gate programs ------------------------------------------------------

    def _forward(self, A, thetas, faults=None):
        """Apply V(θ_r) to chunk A (R, dim, M): per layer RZZ brick, then RY."""
        for ry, rzz in layer_params(self.spec, thetas):
            self._rzz_block(A, rzz, reverse=False, faults=faults)
            for q in range(self.n):
                self._ry(A, q, ry[:, q], faults)

    def _adjoint(self, A, thetas, faults=None):
        for ry, rzz in reversed(layer_params(self.spec, thetas)):
            for q in reversed(range(self.n)):
                self._ry(A, q, -ry[:, q], faults)
            self._rzz_block(A, -rzz, reverse=True, faults=faults)

    def _ry(self, A, q, angles, faults):
        kernels.ry_batch(A.view(np.float64), self._strides[q], np.cos(angles), np.sin(angles))
        if faults is not None:
            faults.apply(A, (q,))

    def _rzz_block(self, A, angles, reverse, faults):
        if not len(self.spec.pairs):
            return
        if faults is None:
            phase = np.exp(-1j * (angles @ self._pair_signs))
            kernels.phase_batch(A, np.ascontiguousarray(phase))
            return
        order = range(len(self.spec.pairs))
        for p in (reversed(order) if reverse else order):
            phase = np.exp(-1j * np.outer(angles[:, p], self._pair_signs[p]))
            kernels.phase_batch(A, phase)
            faults.apply(A, self.spec.pairs[p])

    @property
    def fault_sites(self) -> int:
        """Fault sites in U followed by V†: one per RY, two per RZZ."""
        return 2 * self.spec.depth * (self.n + 2 * len(self.spec.pairs))

    # evaluation ---------------------------------------------------------

    def _check(self, thetas):
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        if thetas.shape[1] != self.d:
            raise ValueError(f"expected {self.d} parameters per rollout, got {thetas.shape[1]}")
        return thetas

    def exact_rewards(self, thetas, rng=None, columns=None) -> np.ndarray:
        """Overlap probabilities before shot sampling, shape (R, M) or (R,).

        ``columns`` (one index per rollout) restricts rollout r to a single
        initial state.
        """
        thetas = self._check(thetas)
        R = thetas.shape[0]
        if columns is not None:
            columns = np.asarray(columns, dtype=np.intp)
            if columns.shape != (R,):
                raise ValueError("columns needs exactly one state index per rollout")
        if self.faults_per_shot:
            return self._channel_rewards(thetas, columns)
        if self.noise is not None:
            rng = ensure_rng(rng)
            start = self.states
        else:
            start = self._target_states
        chunk = self._chunk if columns is None else max(1, _CHUNK_BYTES // (self.dim * 16))
        out = []
        for lo in range(0, R, chunk):
            th = thetas[lo:lo + chunk]
            if columns is None:
                A = np.repeat(start[None], len(th), axis=0)
            else:
                cols = columns[lo:lo + chunk]
                A = np.ascontiguousarray(start[:, cols].T[:, :, None])
            if self.noise is not None:
                hidden = np.broadcast_to(self.target.hidden_params, th.shape)
                faults = _FaultDraws(rng, self.noise, self.fault_sites, (A.shape[0], A.shape[2]),
                                     self._strides)
                self._forward(A, hidden, faults)
                self._adjoint(A, th, faults)
            else:
                self._adjoint(A, th)
            if columns is None:
                out.append(kernels.overlap_prob_batch(self.states, A))
            else:
                amp = np.einsum("ri,ri->r", self.states[:, cols].T.conj(), A[:, :, 0])
                out.append(np.minimum(np.abs(amp) ** 2, 1.0))
        probs = np.concatenate(out, axis=0)
        if not np.all(np.isfinite(probs)):
            raise SimulationError("non-finite overlap produced by the simulator")
        return probs

    def rewards(self, thetas, rng=None, columns=None) -> np.ndarray:
        """Rewards after shot sampling; exact probabilities when shots is None."""
        rng = ensure_rng(rng) if (self.shots is not None or self.noise is not None) else rng
        probs = self.exact_rewards(thetas, rng, columns)
        if self.shots is None:
            return probs
        return rng.binomial(self.shots, np.clip(probs, 0.0, 1.0)) / self.shots

    # exact averaged channel for per-shot fault resampling ---------------

    def _channel_rewards(self, thetas, columns):
        R = thetas.shape[0]
        out = np.empty((R, self.n_states)) if columns is None else np.empty(R)
        hidden = np.asarray(self.target.hidden_params)
        for r in range(R):
            cols = slice(None) if columns is None else [int(columns[r])]
            K = self.states[:, cols]
            rho = np.einsum("ik,jk->kij", K, K.conj())
            rho = self._channel_program(rho, hidden, forward=True)
            rho = self._channel_program(rho, thetas[r], forward=False)
            fid = np.einsum("ik,kij,jk->k", K.conj(), rho, K).real
            fid = np.clip(fid, 0.0, 1.0)
            if columns is None:
                out[r] = fid
            else:
                out[r] = fid[0]
        return out

    def _channel_program(self, rho, theta, forward):
        blocks = layer_params(self.spec, theta)
        pairs = list(range(len(self.spec.pairs)))
        if forward:
            for ry, rzz in blocks:
                for p in pairs:
                    rho = self._rho_rzz(rho, p, rzz[p])
                for q in range(self.n):
                    rho = self._rho_ry(rho, q, ry[q])
        else:
            for ry, rzz in reversed(blocks):
                for q in reversed(range(self.n)):
                    rho = self._rho_ry(rho, q, -ry[q])
                for p in reversed(pairs):
                    rho = self._rho_rzz(rho, p, -rzz[p])
        return rho

    def _rho_1q(self, rho, q, mat):
        n, M = self.n, rho.shape[0]
        t = rho.reshape((M,) + (2,) * (2 * n))
        t = np.moveaxis(np.tensordot(mat, t, axes=([1], [1 + q])), 0, 1 + q)
        t = np.moveaxis(np.tensordot(mat.conj(), t, axes=([1], [1 + n + q])), 0, 1 + n + q)
        return t.reshape(M, self.dim, self.dim)

    def _depolarize(self, rho, q):
        w = self.noise.pauli_weights
        mixed = sum(wi * self._rho_1q(rho, q, P) for wi, P in zip(w, _PAULI_MATS))
        return (1 - self.noise.p) * rho + self.noise.p * mixed

    def _rho_ry(self, rho, q, theta):
        c, s = np.cos(theta), np.sin(theta)
        rho = self._rho_1q(rho, q, np.array([[c, -s], [s, c]], dtype=complex))
        return self._depolarize(rho, q)

    def _rho_rzz(self, rho, p, theta):
        phase = np.exp(-1j * theta * self._pair_signs[p])
        rho = rho * phase[None, :, None] * phase.conj()[None, None, :]
        for q in self.spec.pairs[p]:
            rho = self._depolarize(rho, q)
        return rho
