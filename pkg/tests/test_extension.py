import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sce_indel.chaining import Chain, optimal_chain_fast
from sce_indel.extension import (GapBox, count_extension_cells, edit_distance, extend_gap,
                                 full_alignment, gap_boxes, gap_table)
from sce_indel.formats import encode
from sce_indel.seeding import find_anchors, index_reference
from sce_indel.seqgen import (EditScript, MutationParams, ParameterError, build_homologous_path,
                              generate_reference, mutate)


def recursive_distance(a, b):
    """Memo-free recursion over all edit scripts; exponential, keep inputs tiny."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    return min(recursive_distance(a[1:], b) + 1,
               recursive_distance(a, b[1:]) + 1,
               recursive_distance(a[1:], b[1:]) + (a[0] != b[0]))


def table_distance(a, b):
    prev = list(range(len(b) + 1))
    for x in range(1, len(a) + 1):
        cur = [x] + [0] * len(b)
        for y in range(1, len(b) + 1):
            cur[y] = min(prev[y] + 1, cur[y - 1] + 1, prev[y - 1] + (a[x - 1] != b[y - 1]))
        prev = cur
    return prev[-1]


def ops_cost(ops, a, b):
    """Replay an op string over (a, b) and return its cost, checking consistency."""
    x = y = cost = 0
    for op in ops.tolist():
        if op in (0, 1):
            assert (op == 0) == (a[x] == b[y])
            cost += op
            x += 1
            y += 1
        elif op == 2:
            cost += 1
            x += 1
        else:
            cost += 1
            y += 1
    assert (x, y) == (len(a), len(b))
    return cost


letters = st.lists(st.integers(0, 3), max_size=12)


def test_abutting_single_cell():
    (box,) = gap_boxes(Chain.from_pairs([(1, 1), (3, 3)], 3))
    assert box == GapBox(3, 3, 3, 3) and box.cells == 1
    assert count_extension_cells(Chain.from_pairs([(1, 1), (3, 3)], 3)) == 0


def test_adjacent_anchors_one_update():
    chain = Chain.from_pairs([(1, 1), (4, 4)], 3)
    (box,) = gap_boxes(chain)
    assert box.cells == 4
    assert count_extension_cells(chain) == 1


def test_overlapping_anchors_empty_box():
    (box,) = gap_boxes(Chain.from_pairs([(1, 1), (2, 2)], 3))
    assert box.empty and box.cells == 0


def test_worked_chain_boxes():
    chain = Chain.from_pairs([(1, 1), (2, 2), (3, 3)], 3)
    boxes = gap_boxes(chain)
    by_definition = []
    for (i, j), (i2, j2) in zip(chain.pairs(), chain.pairs()[1:]):
        pts = {(x, y) for x in range(i + 2, i2 + 1) for y in range(j + 2, j2 + 1)}
        by_definition.append(pts)
    for box, pts in zip(boxes, by_definition):
        assert box.empty and not pts
    # the same set-builder check on a chain with a real gap: (1,1) and (6,6)
    (box,) = gap_boxes(Chain.from_pairs([(1, 1), (6, 6)], 3))
    grid = [(x, y) for x in range(10) for y in range(10)]
    want = {(x, y) for x, y in grid if 3 <= x <= 6 and 3 <= y <= 6}
    assert {p for p in grid if box.contains(*p)} == want


def test_identical_strings():
    S = encode("ACGTTGCA")
    g = extend_gap(S, S, GapBox(0, 8, 0, 8))
    assert g.cost == 0 and set(g.ops.tolist()) == {0}


def test_single_insertion():
    g = extend_gap(encode("AC"), encode("AGC"), GapBox(0, 2, 0, 3))
    assert g.cost == 1 == recursive_distance("AC", "AGC")


def test_empty_box_rejected():
    with pytest.raises(ParameterError):
        extend_gap(encode("AC"), encode("AC"), GapBox(2, 1, 0, 2))
    with pytest.raises(ParameterError):
        extend_gap(encode("AC"), encode("AC"), GapBox(0, 5, 0, 2))


def test_exhaustive_small_alphabet_strings():
    for la in range(5):
        for lb in range(5):
            for a in itertools.product(range(2), repeat=la):
                for b in itertools.product(range(2), repeat=lb):
                    assert edit_distance(np.array(a), np.array(b)) == recursive_distance(a, b)


@settings(max_examples=300, deadline=None)
@given(letters, letters)
def test_extend_gap_against_table(a, b):
    S = np.array(a, np.uint8)
    T = np.array(b, np.uint8)
    g = extend_gap(S, T, GapBox(0, len(a), 0, len(b)))
    want = table_distance(a, b)
    assert g.cost == want
    assert ops_cost(g.ops, a, b) == want
    assert g.dp_updates == len(a) * len(b)
    assert g.cells == (len(a) + 1) * (len(b) + 1)
    if len(a) <= 6 and len(b) <= 6:
        assert want == recursive_distance(a, b)


def test_direct_cell_formula():
    for k in (2, 5, 11):
        assert count_extension_cells(Chain.from_pairs([(1, 1), (k + 3, k + 2)], k)) == 6


def test_all_abutting_chain():
    k = 4
    # each anchor's last diagonal point is the next anchor's first
    chain = Chain.from_pairs([(1 + (k - 1) * t, 1 + (k - 1) * t) for t in range(6)], k)
    assert count_extension_cells(chain) == 0
    assert all(b.cells == 1 for b in gap_boxes(chain))


def test_cells_match_instrumented_dp():
    rng = np.random.default_rng(12)
    S = generate_reference(400, 4, rng)
    T = generate_reference(400, 4, rng)
    for _ in range(50):
        u = int(rng.integers(2, 8))
        k = int(rng.integers(1, 6))
        i = np.sort(rng.choice(np.arange(1, 380), u, replace=False))
        j = np.sort(rng.integers(1, 380, u))
        chain = Chain(i, j, k=k)
        touched = sum(extend_gap(S, T, b, traceback=False).dp_updates
                      for b in gap_boxes(chain) if not b.empty)
        assert touched == count_extension_cells(chain)
        assert sum(r[-1] for r in gap_table(chain)) == touched


def test_identity_full_chain():
    rng = np.random.default_rng(2)
    S = generate_reference(300, 4, rng)
    script = EditScript.identity(50, 120)
    T = script.apply(S)
    k = 10
    t = np.arange(1, T.size - k + 2)
    chain = Chain(t + 50, t, k=k)
    aln, acct = full_alignment(S, T, chain)
    assert acct.ext_cells == 0 and aln.cost == 0
    path = build_homologous_path(script)
    span = [(x, y) for x, y in path.points if chain.i[0] <= x <= chain.i[-1] + k - 1]
    assert [tuple(p) for p in aln.points().tolist()] == span


def test_worked_alignment_cost(worked):
    anchors = find_anchors(index_reference(worked.S, 3), worked.S_prime)
    chain = optimal_chain_fast(anchors, 1 / 8)
    aln, _ = full_alignment(worked.S, worked.S_prime, chain)
    (x0, y0), (x1, y1) = aln.start, aln.end
    assert aln.cost == table_distance(worked.S[x0:x1].tolist(), worked.S_prime[y0:y1].tolist())
    whole, acct = full_alignment(worked.S, worked.S_prime, chain, include_ends=True, p=0, m_prime=8)
    assert whole.start == (0, 0) and whole.end == (8, 8)
    assert whole.cost == table_distance(worked.S.tolist(), worked.S_prime.tolist()) == 2
    assert acct.end_cells > 0


def _check_alignment(S, T, chain, aln):
    pts = aln.points()
    steps = set(map(tuple, np.diff(pts, axis=0).tolist()))
    assert steps <= {(1, 1), (0, 1), (1, 0)}
    on = set(map(tuple, pts.tolist()))
    k = chain.k
    px = py = -1
    for i, j in chain.pairs():
        # overlapping anchors are entered at the first diagonal point past the previous end
        diag = [(i + t, j + t) for t in range(k) if i + t >= px and j + t >= py]
        assert diag and all(p in on for p in diag)
        px, py = i + k - 1, j + k - 1
    (x0, y0), (x1, y1) = aln.start, aln.end
    assert aln.cost >= table_distance(S[x0:x1].tolist(), T[y0:y1].tolist())


def test_random_alignments_are_legal():
    rng = np.random.default_rng(31)
    for _ in range(40):
        S = generate_reference(int(rng.integers(60, 200)), 4, rng)
        m_prime = int(rng.integers(30, S.size))
        p = int(rng.integers(0, S.size - m_prime + 1))
        pair = mutate(S, p, m_prime, MutationParams.from_total(0.05, 0.05, 0.05, 0.5), rng)
        k = int(rng.integers(4, 9))
        if pair.m < k:
            continue
        chain = optimal_chain_fast(find_anchors(index_reference(S, k), pair.S_prime), 1 / S.size)
        for ends in (False, True):
            aln, acct = full_alignment(S, pair.S_prime, chain, ends, p, m_prime)
            _check_alignment(S, pair.S_prime, chain, aln)
            if not ends:
                assert acct.gap_cells == count_extension_cells(chain)


def test_homologous_chain_without_u_is_optimal():
    rng = np.random.default_rng(6)
    S = generate_reference(500, 4, rng)
    script = EditScript.from_events(100, 200, substitutions={150: (int(S[149]) + 1) % 4})
    T = script.apply(S)
    k = 12
    chain = optimal_chain_fast(find_anchors(index_reference(S, k), T), 1 / S.size)
    aln, _ = full_alignment(S, T, chain)
    (x0, y0), (x1, y1) = aln.start, aln.end
    assert aln.cost == table_distance(S[x0:x1].tolist(), T[y0:y1].tolist()) == 1


def test_sparser_subchain_costs_more():
    rng = np.random.default_rng(44)
    for _ in range(200):
        u = int(rng.integers(2, 12))
        k = int(rng.integers(1, 10))
        i = np.cumsum(rng.integers(1, 30, u))
        j = np.cumsum(rng.integers(0, 30, u))
        chain = Chain(i, j, k=k)
        keep = np.zeros(u, bool)
        keep[[0, -1]] = True
        keep[1:-1] = rng.random(u - 2) < 0.5
        sub = Chain(i[keep], j[keep], k=k)
        assert count_extension_cells(sub) >= count_extension_cells(chain)


def test_cigar():
    S, T = encode("ACGT"), encode("AGGTT")
    g = extend_gap(S, T, GapBox(0, 4, 0, 5))
    assert g.cost == 2
    aln, _ = full_alignment(encode("AAAACGTAAAA"), encode("AAAACGTAAAA"),
                            Chain.from_pairs([(1, 1), (8, 8)], 4))
    assert aln.cigar() == "10="
