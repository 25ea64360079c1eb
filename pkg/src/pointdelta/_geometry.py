"""Ambient models of the constant-curvature spaces.

flat: R^D itself.  sphere: the unit sphere in R^3.  hyperbolic: the unit
hyperboloid <X, X> = -1 in Minkowski space R^{D,1} (time coordinate first).
Model distances are in units of the curvature length (R, or 1/kappa).
"""
from __future__ import annotations

import math

import numpy as np

from .manifold import ManifoldSpec


class Model:
    def __init__(self, m: ManifoldSpec):
        self.m = m
        self.kind = m.kind
        self.dim = m.dim
        if m.kind == "sphere":
            self.length = m.scale
        elif m.kind == "hyperbolic":
            self.length = 1.0 / m.scale
        else:
            self.length = 1.0

    # inner product on the ambient space
    def inner(self, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if self.kind == "hyperbolic":
            return np.sum(a[..., 1:] * b[..., 1:], axis=-1) - a[..., 0] * b[..., 0]
        return np.sum(a * b, axis=-1)

    def embed(self, p) -> np.ndarray:
        p = self.m.validate_point(p)
        if self.kind == "flat":
            return np.array(p)
        if self.kind == "sphere":
            th, ph = p
            return np.array([math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th)])
        x = np.array(p[:-1])
        y = p[-1]
        s = float(x @ x) + y * y
        return np.concatenate([[(1.0 + s) / (2.0 * y)], x / y, [(1.0 - s) / (2.0 * y)]])

    def chart(self, X):
        """Inverse of embed; X may be (n, ambient)."""
        X = np.asarray(X, dtype=float)
        if self.kind == "flat":
            return X
        if self.kind == "sphere":
            th = np.arctan2(np.hypot(X[..., 0], X[..., 1]), X[..., 2])
            ph = np.mod(np.arctan2(X[..., 1], X[..., 0]), 2.0 * math.pi)
            ph = np.where(ph >= 2.0 * math.pi, 0.0, ph)
            return np.stack([th, ph], axis=-1)
        y = 1.0 / (X[..., 0] + X[..., -1])
        xs = X[..., 1:-1] * y[..., None]
        return np.concatenate([xs, y[..., None]], axis=-1)

    def tangent_basis(self, P) -> np.ndarray:
        """Orthonormal tangent frame at P as rows."""
        P = np.asarray(P, dtype=float)
        if self.kind == "flat":
            return np.eye(self.dim)
        if self.kind == "sphere":
            th = math.atan2(math.hypot(P[0], P[1]), P[2])
            ph = math.atan2(P[1], P[0]) if math.hypot(P[0], P[1]) > 0 else 0.0
            return np.array([
                [math.cos(th) * math.cos(ph), math.cos(th) * math.sin(ph), -math.sin(th)],
                [-math.sin(ph), math.cos(ph), 0.0],
            ])
        frame = []
        for k in range(1, self.dim + 1):
            e = np.zeros(self.dim + 1)
            e[k] = 1.0
            v = e + self.inner(e, P) * P
            for f in frame:
                v = v - self.inner(v, f) * f
            v = v / math.sqrt(self.inner(v, v))
            frame.append(v)
        return np.array(frame)

    def exp(self, P, U, s):
        """Points at model distance s along unit tangent directions U (rows)."""
        P = np.asarray(P, dtype=float)
        U = np.atleast_2d(U)
        s = np.asarray(s, dtype=float)[..., None]
        if self.kind == "flat":
            return P + s * U
        if self.kind == "sphere":
            return np.cos(s) * P + np.sin(s) * U
        return np.cosh(s) * P + np.sinh(s) * U

    def model_distance(self, X, Y):
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        diff = X - Y
        if self.kind == "flat":
            return np.sqrt(np.sum(diff * diff, axis=-1))
        if self.kind == "sphere":
            cross = np.linalg.norm(np.cross(X, Y), axis=-1)
            return np.arctan2(cross, np.sum(X * Y, axis=-1))
        q = np.maximum(self.inner(diff, diff), 0.0)
        return 2.0 * np.arcsinh(0.5 * np.sqrt(q))

    def direction(self, P, Q):
        """Unit tangent at P toward Q (zero for antipodal sphere points) and the model distance."""
        P = np.asarray(P, dtype=float)
        Q = np.asarray(Q, dtype=float)
        dist = float(self.model_distance(P, Q))
        if self.kind == "flat":
            v = Q - P
        elif self.kind == "sphere":
            v = Q - float(P @ Q) * P
        else:
            v = Q + self.inner(Q, P) * P
        nrm = math.sqrt(max(float(self.inner(v, v)), 0.0))
        if nrm < 1e-300 or (self.kind == "sphere" and abs(dist - math.pi) < 1e-12):
            return np.zeros_like(P), dist
        return v / nrm, dist

    # law of cosines in model units, stable for small third sides
    def third_side(self, s, delta, half_vers):
        """Distance between the points at s and delta from a common vertex with
        angle gamma between them, half_vers = sin^2(gamma/2)."""
        s = np.asarray(s, dtype=float)
        if self.kind == "flat":
            return np.sqrt((s - delta) ** 2 + 4.0 * s * delta * half_vers)
        if self.kind == "sphere":
            q = np.sin(0.5 * (s - delta)) ** 2 + np.sin(s) * math.sin(delta) * half_vers
            return 2.0 * np.arcsin(np.sqrt(np.clip(q, 0.0, 1.0)))
        q = np.sinh(0.5 * (s - delta)) ** 2 + np.sinh(s) * math.sinh(delta) * half_vers
        return 2.0 * np.arcsinh(np.sqrt(np.maximum(q, 0.0)))

    def bisector(self, delta, cosg):
        """Model distance along a ray from P (angle gamma to Q, model distance
        delta) at which the ray meets the bisector of P and Q; inf if never."""
        cosg = np.asarray(cosg, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.kind == "flat":
                return np.where(cosg > 0, 0.5 * delta / np.where(cosg > 0, cosg, 1.0), np.inf)
            if self.kind == "sphere":
                return np.arctan2(math.tan(0.5 * delta) if delta < math.pi else np.inf, cosg) + 0.0 * cosg
            th = math.tanh(0.5 * delta)
            ok = cosg > th
            return np.where(ok, np.arctanh(np.where(ok, th / np.where(ok, cosg, 1.0), 0.0)), np.inf)

    def area_factor(self, s):
        """Jacobian of geodesic polar coordinates in model units (per unit solid angle)."""
        s = np.asarray(s, dtype=float)
        if self.kind == "flat":
            return s ** (self.dim - 1)
        if self.kind == "sphere":
            return np.sin(s)
        return np.sinh(s) ** (self.dim - 1)

    def point_at(self, origin, direction_index: int, r: float):
        """Chart coordinates of the point at geodesic distance r from origin
        along the given frame direction."""
        P = self.embed(origin)
        U = self.tangent_basis(P)[direction_index]
        X = self.exp(P, U[None, :], np.array([r / self.length]))[0]
        return tuple(float(c) for c in self.chart(X))
