"""Independent reference implementations used only by the test suite.

Everything here deliberately takes a different computational route from the
package (explicit loops, Heron's formula, law-of-cosines cotangents, heapq
Dijkstra, augmented least squares, generalized LAPACK driver) so agreement
is evidence, not tautology.
"""

import heapq

import numpy as np
import scipy.linalg


def brute_nn(queries, points):
    """Exhaustive nearest-row search, one query at a time."""
    queries = np.asarray(queries, dtype=np.float64)
    points = np.asarray(points, dtype=np.float64)
    out = np.empty(len(queries), dtype=np.int64)
    for i, q in enumerate(queries):
        d = np.sum((points - q) ** 2, axis=1)
        best = 0
        for j in range(1, len(d)):
            if d[j] < d[best]:
                best = j
        out[i] = best
    return out


def heron_area(a, b, c):
    """Triangle area from side lengths (numerically stable ordering)."""
    x, y, z = sorted([a, b, c], reverse=True)
    s = (x + (y + z)) * (z - (x - y)) * (z + (x - y)) * (x + (y - z))
    return 0.25 * np.sqrt(max(s, 0.0))


def total_area_heron(vertices, triangles):
    total = 0.0
    for i, j, k in triangles:
        a = np.linalg.norm(vertices[j] - vertices[i])
        b = np.linalg.norm(vertices[k] - vertices[j])
        c = np.linalg.norm(vertices[i] - vertices[k])
        total += heron_area(a, b, c)
    return total


def dijkstra_ref(vertices, triangles, source):
    """Textbook heapq Dijkstra over the undirected mesh edge graph."""
    n = len(vertices)
    adj = [[] for _ in range(n)]
    seen = set()
    for tri in triangles:
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            key = (min(a, b), max(a, b))
            if key in seen:
                continue
            seen.add(key)
            w = float(np.linalg.norm(vertices[a] - vertices[b]))
            adj[a].append((b, w))
            adj[b].append((a, w))
    dist = np.full(n, np.inf)
    dist[source] = 0.0
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for v, w in adj[u]:
            nd = d + w
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def cot_laplacian_ref(vertices, triangles):
    """Cotangent stiffness + one-third lumped mass, assembled per edge from
    side lengths (law of cosines), densely."""
    n = len(vertices)
    W = np.zeros((n, n))
    mass = np.zeros(n)
    for i, j, k in triangles:
        vi, vj, vk = vertices[i], vertices[j], vertices[k]
        lij = np.linalg.norm(vi - vj)
        ljk = np.linalg.norm(vj - vk)
        lki = np.linalg.norm(vk - vi)
        area = heron_area(lij, ljk, lki)
        mass[[i, j, k]] += area / 3.0
        # cot of the angle opposite each edge, from the law of cosines:
        # cos(theta_k) = (lki^2 + ljk^2 - lij^2) / (2 lki ljk); sin from area
        for (a, b), (la, lb, lopp) in (
            ((i, j), (lki, ljk, lij)),
            ((j, k), (lij, lki, ljk)),
            ((k, i), (ljk, lij, lki)),
        ):
            cos_num = la ** 2 + lb ** 2 - lopp ** 2
            cot = cos_num / (4.0 * area)
            W[a, b] -= 0.5 * cot
            W[b, a] -= 0.5 * cot
    np.fill_diagonal(W, 0.0)
    np.fill_diagonal(W, -W.sum(axis=1))
    return W, mass


def generalized_eigs_ref(W, mass, k):
    """Smallest k eigenpairs via scipy's generalized symmetric driver."""
    vals, vecs = scipy.linalg.eigh(np.asarray(W), np.diag(np.asarray(mass)))
    return vals[:k], vecs[:, :k]


def hks_ref(lam, phi, times):
    """Term-by-term heat kernel signature summation."""
    n, k = phi.shape
    out = np.zeros((n, len(times)))
    for t_idx, t in enumerate(times):
        acc = np.zeros(n)
        for i in range(k):
            acc += np.exp(-lam[i] * t) * phi[:, i] ** 2
        out[:, t_idx] = acc
    return out


def wks_ref(lam, phi, energies, sigma, cutoff=1e-8):
    """Term-by-term wave kernel signature with per-energy weight sums."""
    n, k = phi.shape
    lam_max = max(lam)
    out = np.zeros((n, len(energies)))
    for e_idx, e in enumerate(energies):
        acc = np.zeros(n)
        total = 0.0
        for i in range(k):
            if lam[i] < cutoff * lam_max:
                continue
            w = np.exp(-((e - np.log(lam[i])) ** 2) / (2.0 * sigma ** 2))
            total += w
            acc += w * phi[:, i] ** 2
        out[:, e_idx] = acc / total
    return out


def diffuse_ref(lam, phi, mass, f, t):
    """Heat diffusion as an explicit sum over eigenpairs."""
    out = np.zeros_like(np.asarray(f, dtype=np.float64))
    for i in range(phi.shape[1]):
        coeff = phi[:, i] @ (mass * f)
        out += np.exp(-lam[i] * t) * coeff * phi[:, i]
    return out


def softmax_map_ref(G1, G2, tau):
    """Direct, unstabilized softmax rows (safe for moderate similarities)."""
    G1 = np.asarray(G1, dtype=np.float64)
    G2 = np.asarray(G2, dtype=np.float64)
    out = np.zeros((len(G2), len(G1)))
    for i in range(len(G2)):
        w = np.array([np.exp(np.dot(G2[i], G1[j]) / tau) for j in range(len(G1))])
        out[i] = w / w.sum()
    return out


def solve_fmap_ref(A1, A2, lam1=None, lam2=None, mu=0.0):
    """Row-wise augmented least squares: stack the data system on top of the
    sqrt(mu)-weighted penalty rows and hand it to lstsq (QR route, not the
    normal equations)."""
    A1 = np.asarray(A1, dtype=np.float64)
    A2 = np.asarray(A2, dtype=np.float64)
    k1, d = A1.shape
    k2 = A2.shape[0]
    C = np.zeros((k2, k1))
    for p in range(k2):
        if mu == 0.0:
            top = A1.T
            rhs = A2[p]
        else:
            pen = np.sqrt(mu) * np.abs(lam2[p] - np.asarray(lam1))
            top = np.vstack([A1.T, np.diag(pen)])
            rhs = np.concatenate([A2[p], np.zeros(k1)])
        C[p] = np.linalg.lstsq(top, rhs, rcond=None)[0]
    return C


def fd_gradient(f, X, h=1e-5):
    """Central finite differences of a scalar function of a matrix."""
    X = np.asarray(X, dtype=np.float64)
    g = np.zeros_like(X)
    it = np.nditer(X, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        xp = X.copy()
        xm = X.copy()
        xp[idx] += h
        xm[idx] -= h
        g[idx] = (f(xp) - f(xm)) / (2.0 * h)
        it.iternext()
    return g
