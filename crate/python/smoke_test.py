"""Quick check that the glnk extension imports and gives known answers."""

import glnk


def main():
    assert glnk.index_sl(3, 2) == "168"
    assert glnk.unipotent_index(2, 3) == "1"

    w = glnk.WeylElement.special(3, "wl")
    assert w.perm == [2, 1, 0]
    assert w.name == "wstar"

    q = glnk.KloostermanQuery(1, glnk.WeylElement.special(2, "wl"), [3])
    s = q.sum()
    assert s["exact_integer"] == "-1", s

    d = glnk.bruhat_decompose([["1", "2"], ["3", "7"]])
    assert d["c"] == ["3"], d["c"]

    r = glnk.gg_sum(2, 5, {(1, 1): 4, (2,): -1})
    assert r["sum_value"] == "1", r

    assert glnk.cuspidal_dim(2, 5) == "4"
    assert glnk.unipotent_jordan_type([[1, 1, 0], [0, 1, 1], [0, 0, 1]], 2) == [3]

    t = glnk.character_table_summary(2, 2)
    assert t["order"] == 6 and t["orthogonality"]

    lift, norm = glnk.smallest_lift([[1, 1], [0, 1]], 2)
    assert norm == 1, (lift, norm)

    try:
        glnk.count_ball(3, 2, 50, budget=10)
    except MemoryError:
        pass
    else:
        raise AssertionError("budget not enforced")

    print("smoke test ok")


if __name__ == "__main__":
    main()
