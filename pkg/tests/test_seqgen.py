import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import WORKED_PATH
from sce_indel.formats import decode, dump_script, encode, parse_script, read_fasta, write_fasta
from sce_indel.seqgen import (EditScript, MutationParams, ParameterError, build_homologous_path,
                              correspondence, draw_script, generate_reference, mutate, trial_rng)


def replay_oracle(S, script):
    """Letter-by-letter replay plus the path walked point by point."""
    out, pts = [], [(script.p, 0)]
    x, y = script.p, 0
    off = 0
    for j in range(script.m_prime):
        for letter in script.ins_letters[off:off + script.ins_len[j]].tolist():
            out.append(letter)
            y += 1
            pts.append((x, y))
        off += int(script.ins_len[j])
        x += 1
        if not script.deleted[j]:
            sub = int(script.sub_to[j])
            out.append(sub if sub >= 0 else int(S[script.p + j]))
            y += 1
        pts.append((x, y))
    return out, pts


@st.composite
def scripts(draw, max_len=30):
    n = draw(st.integers(1, max_len))
    S = np.array(draw(st.lists(st.integers(0, 3), min_size=n, max_size=n)), np.uint8)
    m_prime = draw(st.integers(1, n))
    p = draw(st.integers(0, n - m_prime))
    ins_len = draw(st.lists(st.integers(0, 3), min_size=m_prime, max_size=m_prime))
    deleted = draw(st.lists(st.booleans(), min_size=m_prime, max_size=m_prime))
    sub_to = []
    for j in range(m_prime):
        if deleted[j] or not draw(st.booleans()):
            sub_to.append(-1)
        else:
            sub_to.append((int(S[p + j]) + draw(st.integers(1, 3))) % 4)
    letters = draw(st.lists(st.integers(0, 3), min_size=sum(ins_len), max_size=sum(ins_len)))
    return S, EditScript(p, m_prime, ins_len, letters, deleted, sub_to)


def test_single_letter_reference():
    S = generate_reference(1, 4, np.random.default_rng(5))
    assert S.shape == (1,) and S[0] in range(4)


def test_reference_is_deterministic():
    a = generate_reference(500, 4, np.random.default_rng(11))
    b = generate_reference(500, 4, np.random.default_rng(11))
    assert np.array_equal(a, b)


def test_letter_frequencies():
    S = generate_reference(10**6, 4, np.random.default_rng(3))
    freq = np.bincount(S, minlength=4) / S.size
    assert np.all(np.abs(freq - 0.25) <= 0.005)


def test_identity_channel():
    rng = np.random.default_rng(1)
    S = generate_reference(50, 4, rng)
    pair = mutate(S, 7, 30, MutationParams.from_total(0, 0, 0, 0.5), rng)
    assert np.array_equal(pair.S_prime, S[7:37])
    assert pair.script.total_inserted == 0 and pair.script.n_deletions == 0
    assert np.all(pair.script.sub_to == -1)


def test_worked_example_query(worked):
    assert decode(worked.S_prime) == "TACTTTAC"


def test_deletion_only_length_is_binomial():
    rng = np.random.default_rng(8)
    m_prime = 10**5
    S = generate_reference(m_prime, 4, rng)
    pair = mutate(S, 0, m_prime, MutationParams.from_total(0, 0.1, 0, 0.5), rng)
    sd = np.sqrt(m_prime * 0.9 * 0.1)
    assert abs(pair.m - 0.9 * m_prime) <= 3 * sd


def test_diagonal_path():
    path = build_homologous_path(EditScript.identity(0, 3))
    assert path.points == [(0, 0), (1, 1), (2, 2), (3, 3)]


def test_worked_path(worked):
    assert worked.path.points == WORKED_PATH


def test_worked_correspondence(worked):
    f = worked.f
    assert f.f(4) == 5
    assert f.f(5) is None
    # lowest y of column 3: S[3] pairs with S'[3], the inserted T is S'[4]
    assert f.f(3) == 3
    assert f.f_inv(4) is None


def test_identity_correspondence():
    script = EditScript.identity(5, 20)
    f = correspondence(build_homologous_path(script), script, 40)
    assert all(f.f(5 + j) == j for j in range(1, 21))


@settings(max_examples=300, deadline=None)
@given(scripts())
def test_apply_and_path_match_replay_oracle(case):
    S, script = case
    expect, pts = replay_oracle(S, script)
    assert script.apply(S).tolist() == expect
    path = build_homologous_path(script)
    assert path.points == pts
    steps = set(zip(np.diff(path.x).tolist(), np.diff(path.y).tolist()))
    assert steps <= {(1, 1), (0, 1), (1, 0)}
    assert path.points[-1] == (script.p + script.m_prime, len(expect))


@settings(max_examples=200, deadline=None)
@given(scripts())
def test_correspondence_injective_and_letter_preserving(case):
    S, script = case
    Sp = script.apply(S)
    path = build_homologous_path(script)
    f = correspondence(path, script, S.size)
    fwd = f.forward[f.forward > 0]
    assert np.unique(fwd).size == fwd.size
    for x in range(1, S.size + 1):
        y = f.f(x)
        j = x - script.p - 1
        if y is None:
            assert not (0 <= j < script.m_prime) or script.deleted[j]
        else:
            assert f.f_inv(y) == x
            if script.sub_to[j] < 0:
                assert Sp[y - 1] == S[x - 1]


def test_round_trip_many_random_channels():
    master = np.random.default_rng(2024)
    for t in range(10**4):
        rng = trial_rng(99, t)
        n = int(master.integers(1, 40))
        m_prime = int(master.integers(1, n + 1))
        p = int(master.integers(0, n - m_prime + 1))
        theta = master.dirichlet([1, 1, 1]) * 0.5
        S = generate_reference(n, 4, rng)
        pair = mutate(S, p, m_prime, MutationParams.from_total(*theta, 0.5), rng)
        expect, _ = replay_oracle(S, pair.script)
        assert pair.S_prime.tolist() == expect


def test_insertion_length_mean():
    rng = np.random.default_rng(4)
    params = MutationParams.from_total(0, 0, 0.5, 0.6)
    region = generate_reference(4 * 10**5, 4, rng)
    script = draw_script(0, region.size, region, params, rng)
    lens = script.ins_len[script.ins_len > 0]
    assert lens.size >= 10**5
    assert abs(lens.mean() - 1 / (1 - 0.6)) <= 0.02 / (1 - 0.6)


def test_strict_mode_limits():
    with pytest.raises(ParameterError):
        MutationParams.from_total(0.06, 0.05, 0.05, 0.5, strict=True)
    p = MutationParams.from_total(0.05, 0.05, 0.05, 0.5, strict=True)
    assert p.rho_i < p.gamma


@pytest.mark.parametrize("kwargs", [
    dict(theta_s=-0.1, theta_d=0, theta_i=0, gamma=0.5),
    dict(theta_s=0.5, theta_d=0.3, theta_i=0.3, gamma=0.5),
    dict(theta_s=0, theta_d=0, theta_i=0, gamma=1.0),
])
def test_bad_rates(kwargs):
    with pytest.raises(ParameterError):
        MutationParams.from_total(**kwargs)


def test_substitution_to_same_letter_rejected(worked):
    bad = EditScript.from_events(0, 8, substitutions={1: int(worked.S[0])})
    with pytest.raises(ParameterError):
        bad.validate_against(worked.S)


def test_region_outside_reference():
    with pytest.raises(ParameterError):
        mutate(np.zeros(5, np.uint8), 3, 4, MutationParams.from_total(0, 0, 0, 0.5),
               np.random.default_rng(0))


def test_script_text_round_trip(worked):
    text = dump_script(worked.script)
    assert "4  ins:T  del:0  sub:-" in text
    back = parse_script(text)
    assert np.array_equal(back.apply(worked.S), worked.S_prime)
    assert build_homologous_path(back).points == WORKED_PATH


def test_fasta_round_trip(tmp_path):
    seqs = [("a", encode("ACGTACGT" * 20)), ("b", encode("TT"))]
    write_fasta(tmp_path / "x.fa", seqs, width=60)
    back = read_fasta(tmp_path / "x.fa")
    assert [h for h, _ in back] == ["a", "b"]
    assert all(np.array_equal(s, t) for (_, s), (_, t) in zip(seqs, back))
