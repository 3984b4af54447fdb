"""Weighted undirected graphs, Laplacians and the graph Fourier transform.

A graph signal lives on the nodes of a weighted undirected graph. All
spectral machinery in this package is built on the combinatorial Laplacian
``L = D - W`` and its eigendecomposition ``L = U diag(lambda) U^T``: the
columns of ``U`` are the graph Fourier basis and the eigenvalues act as
graph frequencies.

Graphs are small in every supported experiment (a few hundred nodes at
most), so all decompositions are dense.
"""

import csv
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import cdist

from .errors import ContractError, DegenerateGeometryError

__all__ = [
    "Graph",
    "Eigensystem",
    "build_knn_graph",
    "random_sensor_graph",
    "laplacian",
    "eigendecompose",
    "gft",
    "igft",
    "save_graph",
    "load_graph",
]


@dataclass(frozen=True)
class Graph:
    """A weighted undirected graph.

    Parameters
    ----------
    weights : ndarray, shape (n, n)
        Symmetric nonnegative adjacency matrix with zero diagonal.
    coords : ndarray, shape (n, 2), optional
        Node positions, kept when the graph was built from geometry.
    """

    weights: np.ndarray
    coords: np.ndarray | None = field(default=None)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ContractError("adjacency must be a square matrix")
        if not np.array_equal(w, w.T):
            raise ContractError("adjacency must be symmetric")
        if np.any(np.diag(w) != 0):
            raise ContractError("adjacency diagonal must be zero")
        if np.any(w < 0):
            raise ContractError("edge weights must be nonnegative")
        object.__setattr__(self, "weights", w)
        if self.coords is not None:
            c = np.asarray(self.coords, dtype=float)
            if c.shape != (w.shape[0], 2):
                raise ContractError("coords must have shape (n, 2)")
            object.__setattr__(self, "coords", c)

    @property
    def n(self):
        """Number of nodes."""
        return self.weights.shape[0]


@dataclass(frozen=True)
class Eigensystem:
    """Eigendecomposition of a graph Laplacian.

    Attributes
    ----------
    eigenvalues : ndarray, shape (n,)
        Nondecreasing eigenvalues, lambda_0 <= ... <= lambda_{n-1}.
    eigenvectors : ndarray, shape (n, n)
        Orthonormal matrix U whose columns are the eigenvectors.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n(self):
        return self.eigenvalues.shape[0]

    @property
    def lam_max(self):
        """Largest eigenvalue (the top graph frequency)."""
        return float(self.eigenvalues[-1])


def build_knn_graph(points, k):
    """Build a k-nearest-neighbour graph with Gaussian edge weights.

    Each node is connected to its ``k`` nearest Euclidean neighbours with
    weight ``w = exp(-d^2 / (2 theta^2))`` where ``theta`` is the mean
    k-NN distance over all directed neighbour pairs. The directed k-NN
    relation is symmetrized by taking the maximum of the two directed
    weights, which preserves every k-NN edge.

    Parameters
    ----------
    points : ndarray, shape (n, 2)
        Node positions.
    k : int
        Number of nearest neighbours, ``1 <= k < n``.

    Returns
    -------
    Graph

    Raises
    ------
    DegenerateGeometryError
        If two points coincide, making the distance scale ill-defined.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ContractError("points must have shape (n, 2)")
    n = pts.shape[0]
    if n < 2:
        raise ContractError("need at least two points")
    if not 1 <= k < n:
        raise ContractError(f"k must satisfy 1 <= k < n, got k={k}, n={n}")

    d = cdist(pts, pts)
    np.fill_diagonal(d, np.inf)
    if np.any(np.isclose(d, 0.0)):
        raise DegenerateGeometryError("duplicate points: k-NN distances are ill-defined")

    # indices of the k nearest neighbours per node (self excluded above)
    nbr = np.argsort(d, axis=1, kind="stable")[:, :k]
    knn_d = np.take_along_axis(d, nbr, axis=1)
    theta = knn_d.mean()

    w_dir = np.zeros((n, n))
    rows = np.repeat(np.arange(n), k)
    w_dir[rows, nbr.ravel()] = np.exp(-knn_d.ravel() ** 2 / (2.0 * theta**2))
    w = np.maximum(w_dir, w_dir.T)
    return Graph(weights=w, coords=pts)


def is_connected(g):
    """True if the graph has a single connected component."""
    ncomp, _ = connected_components(g.weights > 0, directed=False)
    return int(ncomp) == 1


def random_sensor_graph(n, k, rng, max_tries=50):
    """Draw a random sensor graph: k-NN over uniform points in the unit square.

    Coordinate draws that produce a disconnected graph are rejected and
    redrawn from the same generator, so the result is always connected.

    Parameters
    ----------
    n : int
        Number of nodes.
    k : int
        Nearest-neighbour count.
    rng : numpy.random.Generator
        Source of randomness; consumed in place.
    max_tries : int
        Redraw budget before giving up.

    Returns
    -------
    Graph
    """
    for _ in range(max_tries):
        g = build_knn_graph(rng.uniform(0.0, 1.0, size=(n, 2)), k)
        if is_connected(g):
            return g
    raise DegenerateGeometryError(
        f"no connected {k}-NN graph on {n} nodes in {max_tries} draws; increase k"
    )


def laplacian(g):
    """Combinatorial Laplacian ``L = D - W`` of a graph.

    Row sums are exactly zero and the matrix is positive semidefinite.
    """
    w = g.weights
    return np.diag(w.sum(axis=1)) - w


def eigendecompose(L, sym_tol=1e-10):
    """Eigendecompose a symmetric matrix into an :class:`Eigensystem`.

    Eigenvalues come out sorted ascending. Each eigenvector's sign is
    fixed so that its first nonzero entry is positive, which makes the
    decomposition reproducible across platforms.

    Parameters
    ----------
    L : ndarray, shape (n, n)
        Symmetric matrix (typically a graph Laplacian).
    sym_tol : float
        Largest tolerated absolute asymmetry, scaled by max(1, |L|_max).

    Raises
    ------
    ContractError
        If ``L`` is not symmetric within tolerance.
    """
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ContractError("matrix must be square")
    scale = max(1.0, float(np.abs(L).max()) if L.size else 1.0)
    if float(np.abs(L - L.T).max()) > sym_tol * scale:
        raise ContractError("matrix is not symmetric")

    lam, U = np.linalg.eigh((L + L.T) / 2.0)
    # sign convention: first entry with magnitude above roundoff is positive
    for j in range(U.shape[1]):
        col = U[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-12 * np.abs(col).max())
        if nz.size and col[nz[0]] < 0:
            U[:, j] = -col
    return Eigensystem(eigenvalues=lam, eigenvectors=U)


def gft(es, x):
    """Graph Fourier transform ``x_hat = U^T x``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (es.n,):
        raise ContractError(f"signal length {x.shape} does not match graph size {es.n}")
    return es.eigenvectors.T @ x


def igft(es, x_hat):
    """Inverse graph Fourier transform ``x = U x_hat``."""
    x_hat = np.asarray(x_hat, dtype=float)
    if x_hat.shape != (es.n,):
        raise ContractError(f"spectrum length {x_hat.shape} does not match graph size {es.n}")
    return es.eigenvectors @ x_hat


def save_graph(g, edges_path, header_path, coords_path=None):
    """Write a graph as an edge-list CSV plus a JSON size header.

    The edge list holds one row ``u,v,weight`` per undirected edge with
    u < v; weights are written with full round-trip precision. The JSON
    header records ``{"n": N}``. Coordinates, when present and requested,
    go to a separate ``node,x,y`` CSV.
    """
    iu, iv = np.nonzero(np.triu(g.weights, k=1))
    with open(edges_path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["u", "v", "weight"])
        for u, v in zip(iu.tolist(), iv.tolist()):
            wr.writerow([u, v, repr(float(g.weights[u, v]))])
    with open(header_path, "w") as fh:
        json.dump({"n": int(g.n)}, fh)
        fh.write("\n")
    if coords_path is not None:
        if g.coords is None:
            raise ContractError("graph has no coordinates to save")
        with open(coords_path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["node", "x", "y"])
            for i in range(g.n):
                wr.writerow([i, repr(float(g.coords[i, 0])), repr(float(g.coords[i, 1]))])


def load_graph(edges_path, header_path, coords_path=None):
    """Read a graph written by :func:`save_graph`."""
    with open(header_path) as fh:
        n = int(json.load(fh)["n"])
    w = np.zeros((n, n))
    with open(edges_path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd, None)
        if header != ["u", "v", "weight"]:
            raise ContractError(f"unexpected edge-list header: {header}")
        for row in rd:
            u, v, wt = int(row[0]), int(row[1]), float(row[2])
            w[u, v] = wt
            w[v, u] = wt
    coords = None
    if coords_path is not None:
        coords = np.zeros((n, 2))
        with open(coords_path, newline="") as fh:
            rd = csv.reader(fh)
            next(rd, None)
            for row in rd:
                coords[int(row[0])] = [float(row[1]), float(row[2])]
    return Graph(weights=w, coords=coords)
