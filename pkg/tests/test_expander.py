import io
import json
import math

import numpy as np
import pytest

from lowdisc.expander import (
    BadGraph,
    CirculantGraph,
    build_expander,
    complete_graph,
    graph_from_connection,
    graph_from_set,
    spectral_gap,
)


def test_cycle_signed_second_eigenvalue():
    # C_n eigenvalues are 2cos(2*pi*k/n); the largest non-principal one in
    # absolute value is |2cos(pi*floor(n/2)*2/n)|, near 2 for odd n. The
    # signed second-largest is 2cos(2*pi/n).
    for n in (5, 8, 12):
        g = graph_from_connection(n, (1, n - 1))
        assert g.degree == 2
        second = max(v for v in g.spectrum[1:])
        assert abs(second - 2 * math.cos(2 * math.pi / n)) < 1e-9
        assert abs(g.lam - max(abs(v) for v in g.spectrum[1:])) < 1e-12


def test_complete_graph_gap():
    for n in (3, 7, 20):
        g = complete_graph(n)
        assert g.degree == n - 1
        assert abs(g.lam - 1.0) < 1e-9
        assert abs(g.spectrum[0] - (n - 1)) < 1e-9


def test_connection_must_be_negation_closed():
    with pytest.raises(ValueError):
        CirculantGraph(order=7, connection=(1,), degree=1,
                       spectrum=(1.0,) * 7, lam=1.0, provenance={})


def test_graph_from_set_rejects_self_loop():
    with pytest.raises(BadGraph):
        graph_from_set(10, [1, 3], delta=9)  # 1 + 9 = 0 mod 10


def test_edges_are_simple_and_symmetric():
    g = graph_from_connection(11, (1, 3, 8, 10))
    es = list(g.edges())
    assert all(u < v for u, v in es)
    assert len(es) == g.order * g.degree // 2
    for u in range(g.order):
        nb = g.neighbors(u)
        assert len(nb) == g.degree
        assert all(u in g.neighbors(v) for v in nb)


def test_edge_list_output():
    g = graph_from_connection(7, (1, 6))
    buf = io.StringIO()
    g.write_edge_list(buf)
    lines = buf.getvalue().strip().splitlines()
    assert len(lines) == 7
    assert all(len(line.split()) == 2 for line in lines)


def test_json_round_trip():
    g = graph_from_connection(13, (2, 5, 8, 11), provenance={"note": "test"})
    d = g.to_json_dict()
    assert d["schema"] == "lowdisc.circulant_graph/1"
    blob = json.dumps(d)
    g2 = CirculantGraph.from_json_dict(json.loads(blob))
    assert g2.order == g.order
    assert g2.connection == g.connection
    assert abs(g2.lam - g.lam) < 1e-12


def test_build_small_is_complete():
    g = build_expander(50, 0.5, mode="practical", seed=1)
    assert g.provenance["branch"] == "complete"
    assert g.degree == 49


def test_build_large_practical():
    n = 1009
    g = build_expander(n, 0.5, mode="practical", seed=7)
    assert g.order == n
    assert g.lam <= max(0.5, 1.0 / (n - 1)) * g.degree + 1e-9
    if g.provenance.get("branch") == "low_disc":
        assert g.degree <= 80 * math.log2(n)
    # deterministic under a fixed seed
    g2 = build_expander(n, 0.5, mode="practical", seed=7)
    assert g2.connection == g.connection


def test_build_paper_mode_total():
    g = build_expander(1009, 0.5, mode="paper", seed=3)
    assert g.lam <= max(0.5, 1.0 / (g.order - 1)) * g.degree + 1e-9


def test_build_rejects_bad_params():
    with pytest.raises(ValueError):
        build_expander(1, 0.5)
    with pytest.raises(ValueError):
        build_expander(100, 0.0)
    with pytest.raises(ValueError):
        build_expander(100, 0.5, mode="mystery")


def test_spectral_gap_dense_cross_check():
    g = graph_from_connection(40, (1, 5, 35, 39))
    lam, cert = spectral_gap(g)
    assert abs(lam - g.lam) < 1e-9
    assert cert["dense_checked"]
    assert cert["numeric_error"] < 1e-8
    # independent dense confirmation
    adj = np.zeros((40, 40))
    for u, v in g.edges():
        adj[u, v] = adj[v, u] = 1.0
    eigs = np.linalg.eigvalsh(adj)
    dense_lam = max(abs(eigs[0]), abs(eigs[-2]))
    assert abs(lam - dense_lam) < 1e-8


def test_spectral_gap_discrepancy_bound():
    g = build_expander(10007, 0.5, mode="practical", seed=7)
    lam, cert = spectral_gap(g)
    if g.provenance.get("branch") == "low_disc":
        assert cert["disc_bound"] is not None
        assert lam <= cert["disc_bound"] + 1e-9
