import math
from fractions import Fraction as F

import pytest

from fractalforms.family import (
    ExactUnavailableError,
    FitError,
    OneParamFamily,
    RationalFunction,
    interpolate_rational,
)
from fractalforms.network import PatternMismatchError, renormalize, trace
from fractalforms.structure import embed_level, structure_from_config, structure_to_config


def sg_alpha(v):
    return (3 * v * v + 6 * v + 1) / (4 * v + 6)


def sg_rho(v):
    return (3 * v + 2) / (2 * v + 1)


def vicsek_alpha(v, s):
    return (2 * s + v) / (1 + 2 * s)


def vicsek_rho(v, s):
    return (1 + v + 4 * s) / (s * (1 + v))


# -- evaluation ----------------------------------------------------------------

def test_eval_at_one_is_unit_triangle(sg_family):
    net = sg_family.eval(F(1))
    assert all(c == 1 for _, _, c, _ in net.edges())


def test_eval_substitutes_on_vee_edges(sg_family):
    net = sg_family.eval(F(2))
    assert net.conductance("p1", "p3") == 2
    assert net.conductance("p1", "p2") == 1
    assert dict(((u, w), lab) for u, w, _, lab in net.edges())[("p1", "p3")] == "vee"


def test_eval_rejects_nonpositive(sg_family):
    with pytest.raises(ValueError):
        sg_family.eval(F(0))


# -- alpha/rho extraction --------------------------------------------------------

def test_sg_alpha_rho_closed_form_at_random_rationals(sg_family):
    probes = [F(3, 2), F(7, 3), F(5), F(41, 7), F(12), F(99, 10),
              F(17), F(55, 2), F(71), F(97)]
    for v in probes:
        ar = sg_family.extract_alpha_rho(v)
        assert ar.alpha == sg_alpha(v)
        assert ar.rho == sg_rho(v)


def test_sg_fixed_point_values(sg_family):
    ar = sg_family.extract_alpha_rho(F(1))
    assert (ar.alpha, ar.rho) == (1, F(5, 3))


@pytest.mark.parametrize("s", [F(1, 2), F(1, 4)])
def test_vicsek_alpha_rho_closed_form(s, vicsek_family, vicsek_quarter_family):
    fam = vicsek_family if s == F(1, 2) else vicsek_quarter_family
    for v in (F(2), F(7, 2), F(13)):
        ar = fam.extract_alpha_rho(v)
        assert ar.alpha == vicsek_alpha(v, s)
        assert ar.rho == vicsek_rho(v, s)


def test_family_invariance_identity_exact(sg_family, sg):
    # renormalize(E_v) equals rho(v)^{-1} E_{alpha(v)} entrywise
    for v in (F(2), F(9, 4), F(31, 3)):
        lam = renormalize(sg, sg_family.eval(v))
        expected = sg_family.eval(sg_alpha(v)).scale(1 / sg_rho(v))
        assert lam.equal(expected)


def test_pattern_mismatch_reported():
    # a template that renormalization does not preserve: Vicsek with a single
    # diagonal vee edge and no opposite diagonal
    from fractalforms.configs import load_config

    cfg = load_config("vicsek")
    cfg["family"] = {"vee": [["p1", "p3"]],
                     "template": [["p1", "p2", "1"], ["p2", "p3", "1"],
                                  ["p3", "p4", "1"], ["p1", "p4", "1"],
                                  ["p1", "p3", "v"]]}
    fam = OneParamFamily(structure_from_config(cfg))
    with pytest.raises(PatternMismatchError):
        fam.extract_alpha_rho(F(2))


# -- rational interpolation -------------------------------------------------------

def test_fit_reproduces_closed_forms(sg_family):
    a, r = sg_family.fit()
    assert a == RationalFunction([F(1), F(6), F(3)], [F(6), F(4)])
    assert r == RationalFunction([F(2), F(3)], [F(1), F(2)])


def test_fit_higher_degree_is_equivalent(sg):
    fam = OneParamFamily(sg)
    a2, r2 = fam.fit(degree=2)
    fam2 = OneParamFamily(sg)
    a4, r4 = fam2.fit(degree=4)
    assert a2 == a4 and r2 == r4


def test_interpolate_constant_degree_zero():
    pts = [(F(k), F(5, 7)) for k in range(1, 7)]
    fn = interpolate_rational(pts, 2)
    assert fn.deg_num == 0 and fn.deg_den == 0
    assert fn(F(12)) == F(5, 7)


def test_interpolate_failure_reports_witness():
    # samples of v -> 2^v are not rational of low degree
    pts = [(F(k), F(2 ** k)) for k in range(8)]
    with pytest.raises(FitError, match="witness"):
        interpolate_rational(pts, 2)


# -- assumptions -------------------------------------------------------------------

def test_sg_assumptions_all_hold(sg_family):
    report = sg_family.verify_assumptions()
    assert report.all_hold()
    assert report.rho_G == F(3, 2)
    assert report.beta == F(4, 3)


def test_vicsek_assumptions_all_hold(vicsek_family):
    report = vicsek_family.verify_assumptions()
    assert report.all_hold()
    assert report.rho_G == 2 and report.beta == 2


def test_spanning_vee_family_is_vanishing(sg):
    cfg = structure_to_config(sg)
    cfg["family"] = {"vee": [["p1", "p2"], ["p2", "p3"]]}
    fam = OneParamFamily(structure_from_config(cfg))
    report = fam.verify_assumptions()
    assert not report.non_vanishing
    assert not report.all_hold()


# -- v_min ---------------------------------------------------------------------------

def test_sg_vmin_is_one_exact(sg_family):
    v, exact = sg_family.vmin()
    assert exact and v == 1
    assert abs(float(v) - 1.0) <= 1e-10


def test_vicsek_vmin(vicsek_family):
    # alpha affine (derivative never 0), alpha(v)=v at v=1, rho(v)=r_max has
    # no admissible root
    v, exact = vicsek_family.vmin()
    assert exact and v == 1


def test_fixed_line_family_rejected():
    # pure two-diagonal Vicsek template has alpha(v) = v identically
    from fractalforms.configs import load_config

    cfg = load_config("vicsek")
    cfg["family"] = {"vee": [["p1", "p3"]],
                     "template": [["p1", "p3", "v"], ["p2", "p4", "1"]]}
    fam = OneParamFamily(structure_from_config(cfg))
    with pytest.raises(ValueError, match="fixed line"):
        fam.vmin()


# -- inverse iteration ------------------------------------------------------------------

def test_alpha_inverse_fixed_point(sg_family):
    assert sg_family.alpha_inverse(F(1), 1, exact=True) == 1
    assert sg_family.alpha_inverse(1.0, 1) == pytest.approx(1.0, abs=1e-9)


def test_alpha_inverse_quadratic_oracle(sg_family):
    # alpha(u) = 5/2 <=> 3u^2 - 4u - 14 = 0 <=> u = (2 + sqrt(46)) / 3
    u = sg_family.alpha_inverse(2.5, 1)
    assert u == pytest.approx((2 + math.sqrt(46)) / 3, rel=1e-11)


def test_alpha_inverse_monotone_in_n(sg_family):
    xs = [sg_family.alpha_inverse(2.0, n) for n in range(8)]
    assert all(b > a for a, b in zip(xs, xs[1:]))


def test_alpha_inverse_domain_error(sg_family):
    with pytest.raises(ValueError, match="v_min"):
        sg_family.alpha_inverse(0.5, 1)


def test_alpha_inverse_exact_unavailable_off_chain(sg_family):
    with pytest.raises(ExactUnavailableError):
        sg_family.alpha_inverse(F(2), 1, exact=True)


def test_alpha_inverse_roundtrip_on_log_grid(sg_family):
    a = sg_family.alpha_hat
    v = 1.0001
    while v < 1e8:
        u = sg_family.alpha_inverse(v, 1)
        assert a(u) == pytest.approx(v, rel=1e-10)
        v *= 9.3
    # vicsek affine inverse is exact
    assert a(sg_family.alpha_inverse(F(1), 1, exact=True)) == 1


def test_rho_n_values(sg_family):
    assert sg_family.rho_n(2.0, 0) == 1.0
    for n in (1, 3, 5):
        assert sg_family.rho_n(F(1), n, exact=True) == F(5, 3) ** n
    # direct composition oracle at v=2, n=2
    u1 = sg_family.alpha_inverse(2.0, 1)
    u2 = sg_family.alpha_inverse(2.0, 2)
    expect = sg_rho(u1) * sg_rho(u2)
    assert sg_family.rho_n(2.0, 2) == pytest.approx(expect, rel=1e-10)


# -- level forms and nestedness ------------------------------------------------------------

def test_level_form_zero_is_eval(sg_family):
    net, _ = sg_family.level_form(F(2), 0, exact=True)
    assert net.relabel(sg_family.structure.boundary).equal(sg_family.eval(F(2)))


def test_level_form_structure_at_chain_parameter(sg_family):
    v = sg_family.forward_parameter(F(2), 1)   # alpha(2) = 25/14
    net, g = sg_family.level_form(v, 1, exact=True)
    rho1 = sg_family.rho_n(v, 1, exact=True)
    ones = {c for _, _, c, lab in net.edges() if lab == "one"}
    vees = {c for _, _, c, lab in net.edges() if lab == "vee"}
    assert ones == {rho1}
    assert vees == {rho1 * 2}  # alpha^{-1}(v) = 2


def test_level_form_fixed_point_sequence(sg_family, sg):
    from fractalforms.network import replicate

    net, _ = sg_family.level_form(F(1), 2, exact=True)
    rep, _ = replicate(sg, sg_family.eval(F(1)), 2)
    assert net.equal(rep.scale(F(25, 9)))


def _nested(fam, v, m, n, exact, rel=0.0):
    net_n, g_n = fam.level_form(v, n, exact=exact)
    net_m, g_m = fam.level_form(v, m, exact=exact)
    emb = embed_level(fam.structure, m, n, g_m, g_n)
    traced = trace(net_n, list(emb)).relabel(range(len(emb)))
    return traced.equal(net_m.relabel(range(net_m.n)), rel=rel)


@pytest.mark.parametrize("v", [2.0, 10.0])
def test_sg_nestedness_float(sg_family, v):
    for m in range(3):
        for n in range(m + 1, 4):
            assert _nested(sg_family, v, m, n, exact=False, rel=1e-9)


@pytest.mark.parametrize("v", [F(2), F(10)])
def test_vicsek_nestedness_exact(vicsek_family, v):
    for m in range(3):
        for n in range(m + 1, 4):
            assert _nested(vicsek_family, v, m, n, exact=True)


def test_sg_nestedness_exact_on_chain(sg_family):
    v = sg_family.forward_parameter(F(2), 3)
    for m in range(3):
        assert _nested(sg_family, v, m, 3, exact=True)


# -- limit constants -------------------------------------------------------------------------

def test_limit_constants(sg_family, vicsek_family, vicsek_quarter_family):
    assert sg_family.limit_constants() == (F(3, 2), F(4, 3))
    assert vicsek_family.limit_constants() == (F(2), F(2))
    assert vicsek_quarter_family.limit_constants() == (F(4), F(3, 2))


def test_rho_n_over_rho_G_bounded(sg_family):
    rho_G = 1.5
    vals = [sg_family.rho_n(2.0, n) / rho_G ** n for n in range(21)]
    assert 0.5 < min(vals) and max(vals) < 2.0
    # and the sequence stabilizes (geometric tail)
    assert abs(vals[20] - vals[15]) < 0.02


def test_alpha_iterates_over_beta_bounded(sg_family):
    beta = 4.0 / 3.0
    for v in (2.0, 10.0, 100.0):
        vals = [sg_family.alpha_inverse(v, n) / (v * beta ** n) for n in range(31)]
        assert 0.2 < min(vals) and max(vals) < 5.0


def test_alpha_rho_product_monotone_in_v(sg_family):
    # v -> alpha^{-m}(v) * rho_m(v) is non-decreasing
    for m in (1, 2, 3):
        grid = [1.05 * 1.7 ** k for k in range(12)]
        prev = None
        for v in grid:
            val = sg_family.alpha_inverse(v, m) * sg_family.rho_n(v, m)
            if prev is not None:
                assert val >= prev * (1 - 1e-12)
            prev = val


def test_vee_pattern_preserved_by_renormalization(sg_family, sg):
    # the two-class position pattern is what the map preserves, not values
    lam = renormalize(sg, sg_family.eval(F(7)))
    template = sg_family.template
    vals = {e: lam.conductance(*e) for e in template}
    one_vals = {vals[e] for e, k in template.items() if k == "one"}
    vee_vals = {vals[e] for e, k in template.items() if k == "vee"}
    assert len(one_vals) == 1 and len(vee_vals) == 1
    assert one_vals != vee_vals
