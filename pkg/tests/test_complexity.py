from wfsnap import complexity, lsnap, snap1


def test_snap1_hand_traced_counts():
    # each component written once, so every copy SC fires during a scan
    for m in (1, 8, 64):
        assert complexity.solo_count("snap1", "update", m) == 11
    for m in (1, 3, 7):
        assert complexity.solo_count("snap1", "scan", m) == 2 + 12 * m
    for r in (0, 1, 2):
        assert complexity.solo_count("snap1", "partial_scan", 4, r=r) == 2 + 12 * r


def test_lsnap_update_counts():
    # nobody has scanned, so announce seqs are 0 and no copy SC fires
    for lam in (1, 2, 4):
        assert complexity.solo_count("lsnap", "update", 3, lam) == 5 + 6 * lam


def test_counts_within_frozen_bounds():
    for m in (1, 4):
        assert complexity.solo_count("snap1", "scan", m) <= snap1.scan_bound(m)
        for lam in (1, 2, 4):
            assert complexity.solo_count("lsnap", "scan", m, lam) <= lsnap.scan_bound(m, lam)
            assert complexity.solo_count("lsnap", "apply_update", m, lam) <= lsnap.apply_update_bound(lam)


def test_fit_exact_and_inexact():
    exact = complexity.fit([[1, 2, 3]], [5, 7, 9])
    assert exact["exact"] and exact["coef"] == [3.0, 2.0]
    assert not complexity.fit([[1, 2, 3]], [1, 4, 9])["exact"]


def test_snap1_report_checks_hold():
    rep = complexity.snap1_report([1, 2, 4, 8], [0, 1, 2])
    assert rep["ok"], rep["checks"]
    assert rep["fits"]["scan~m"]["coef"] == [2.0, 12.0]


def test_lsnap_report_checks_hold():
    rep = complexity.lsnap_report([1, 2, 4, 8], [1, 2, 3, 4], [0, 1, 2])
    assert rep["ok"], rep["checks"]
    a, b, c, d = rep["fits"]["scan~lambda+m+lambda*m"]["coef"]
    assert d > 0  # the λ·m term carries the growth
