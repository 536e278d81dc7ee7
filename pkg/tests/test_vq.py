import numpy as np
import pytest

from lossyqsim import kernels
from lossyqsim.circuits import build_benchmark, initial_state
from lossyqsim.core import StateVector
from lossyqsim.vq import (
    AmplitudePool,
    Codebook,
    PackedState,
    codebook_from_bytes,
    codebook_to_bytes,
    collect_pool,
    nearest_codeword,
    nearest_codewords,
    pack_state,
    read_codebook,
    read_packed_state,
    round_to_codebook,
    run_vq_circuit,
    train_codebook,
    unpack_state,
    write_codebook,
    write_packed_state,
)


def brute_nearest(z, c):
    d = np.abs(z[:, None] - c[None, :]) ** 2
    return np.argmin(d, axis=1)  # argmin returns the first minimum


@pytest.fixture(scope="module")
def small():
    spec = build_benchmark(4, 4)
    psi0 = initial_state(4, "positive:1")
    return spec, psi0, collect_pool(spec, psi0)


def make_codebook(c, m):
    return Codebook(m=m, centroids=np.unique(c), seed=0, n=0, pool_digest=b"\0" * 32)


def test_nearest_matches_brute_force(rng):
    cb = make_codebook(rng.standard_normal(256) + 1j * rng.standard_normal(256), 8)
    z = 1.2 * (rng.standard_normal(100_000) + 1j * rng.standard_normal(100_000))
    assert np.array_equal(nearest_codewords(z, cb), brute_nearest(z, cb.centroids))


def test_nearest_ties_go_to_lowest_index(rng):
    # lattice codebook and queries on cell boundaries: lots of exact ties
    g = np.arange(-4, 4, dtype=np.float64)
    cb = make_codebook((g[:, None] + 1j * g[None, :]).ravel(), 6)
    q = (rng.integers(-8, 8, 20_000) / 2) + 1j * (rng.integers(-8, 8, 20_000) / 2)
    assert np.array_equal(nearest_codewords(q, cb), brute_nearest(q, cb.centroids))
    assert nearest_codeword(0.5 + 0.5j, cb) == int(brute_nearest(np.array([0.5 + 0.5j]), cb.centroids)[0])


def test_backends_agree_on_nearest(rng):
    c = np.sort(rng.standard_normal(300)) + 1j * rng.standard_normal(300)
    perm = rng.permutation(300).astype(np.int64)
    z = rng.standard_normal(5000) + 1j * rng.standard_normal(5000)
    args = (z.real.copy(), z.imag.copy(), c.real.copy(), c.imag.copy(), perm)
    a, da = kernels.nearest_nb(*args)
    b, db = kernels.nearest_np(*args)
    assert np.array_equal(a, b) and np.array_equal(da, db)


def test_backends_agree_on_kmeanspp_and_sums(small, rng):
    pts = small[2].points
    xr, xi = pts.real.copy(), pts.imag.copy()
    draws = rng.random(64)
    assert np.array_equal(kernels.kmeanspp_nb(xr, xi, draws), kernels.kmeanspp_np(xr, xi, draws))
    labels = rng.integers(0, 16, pts.size).astype(np.int64)
    cr, ci = rng.standard_normal(16), rng.standard_normal(16)
    for a, b in zip(kernels.cluster_sums_nb(xr, xi, labels, cr, ci), kernels.cluster_sums_np(xr, xi, labels, cr, ci)):
        assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("m", [1, 3, 5, 7])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_sse_never_increases(small, m, seed):
    cb = train_codebook(small[2], m, seed=seed)
    sse = np.array(cb.sse_history)
    assert np.all(np.diff(sse) <= 0), np.diff(sse).max()


def test_codebook_sorted_unique(small):
    cb = train_codebook(small[2], 6, seed=3)
    assert cb.is_sorted()
    assert np.unique(cb.centroids).size == len(cb) <= 64


def test_training_is_deterministic(small):
    a = train_codebook(small[2], 5, seed=11)
    b = train_codebook(small[2], 5, seed=11)
    assert a.digest() == b.digest()
    assert a.sse_history == b.sse_history


def test_pool_too_small():
    with pytest.raises(ValueError, match="smaller"):
        train_codebook(AmplitudePool(np.arange(10, dtype=np.complex128)), 4)


def test_degenerate_pool_keeps_fewer_codewords():
    pool = AmplitudePool(np.repeat(np.array([0.5, -0.5j, 0.1 + 0.1j]), 20))
    cb = train_codebook(pool, 4)
    assert len(cb) == 3
    assert set(cb.centroids) == {0.5, -0.5j, 0.1 + 0.1j}


def test_vq_states_are_codewords(small):
    spec, psi0, pool = small
    cb = train_codebook(pool, 6, seed=0)
    seen = []
    run_vq_circuit(spec, psi0, "float16", cb, tap=lambda t, s: seen.append(s))
    assert len(seen) == len(spec) + 1
    book = set(cb.centroids.tolist())
    assert all(set(s.amps.tolist()) <= book for s in seen)


@pytest.mark.parametrize("m", [1, 3, 5, 8])
def test_pack_roundtrip(small, m):
    spec, psi0, pool = small
    cb = train_codebook(pool, m, seed=1)
    psi = round_to_codebook(initial_state(4, "random:0"), cb)
    p = pack_state(psi, cb)
    assert p.bit_length == m * 16
    assert len(p.payload) == -(-m * 16 // 8)
    assert unpack_state(p, cb) == psi
    assert pack_state(unpack_state(p, cb), cb).payload == p.payload


def test_pack_is_msb_first():
    cb = make_codebook(np.arange(8, dtype=np.complex128), 3)
    # indices 6, 1 at 3 bits each: 110 001, then two bits of padding
    psi = StateVector(1, cb.centroids[[6, 1]])
    assert pack_state(psi, cb).payload == bytes([0b11000100])


def test_pack_rejects_off_codebook(small):
    cb = train_codebook(small[2], 3)
    with pytest.raises(ValueError, match="not a codeword"):
        pack_state(initial_state(4, "random:0"), cb)


def test_unpack_checks_codebook(small):
    a = train_codebook(small[2], 3, seed=0)
    b = train_codebook(small[2], 3, seed=5)
    p = pack_state(round_to_codebook(initial_state(4), a), a)
    if a.digest() != b.digest():
        with pytest.raises(ValueError):
            unpack_state(p, b)
    with pytest.raises(ValueError):
        unpack_state(PackedState(p.n, 4, p.codebook_digest, p.payload), a)


def test_codebook_file_roundtrip(small, tmp_path):
    cb = train_codebook(small[2], 7, seed=2, n=4)
    path = tmp_path / "cb.qvqc"
    write_codebook(path, cb)
    back = read_codebook(path)
    assert back.centroids.tobytes() == cb.centroids.tobytes()
    assert (back.m, back.seed, back.n, back.pool_digest) == (cb.m, cb.seed, cb.n, cb.pool_digest)
    assert codebook_to_bytes(back) == path.read_bytes()
    assert path.read_bytes()[:4] == b"QVQC"


def test_packed_file_roundtrip(small, tmp_path):
    cb = train_codebook(small[2], 5, seed=0)
    p = pack_state(round_to_codebook(initial_state(4, "random:9"), cb), cb)
    path = tmp_path / "s.qvqs"
    write_packed_state(path, p)
    q = read_packed_state(path)
    assert (q.n, q.m, q.codebook_digest, q.payload) == (p.n, p.m, p.codebook_digest, p.payload)


def test_corrupt_files_rejected(small):
    blob = bytearray(codebook_to_bytes(train_codebook(small[2], 3)))
    with pytest.raises(ValueError):
        codebook_from_bytes(bytes(blob[:-3]))
    blob[:4] = b"XXXX"
    with pytest.raises(ValueError):
        codebook_from_bytes(bytes(blob))
