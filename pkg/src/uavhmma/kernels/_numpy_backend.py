"""Pure-numpy implementations of the hot inner-loop kernels.

Shapes and conventions shared with the compiled backend:

* ``gains``     (K, N)    linear channel power gain per user and slot
* ``members``   (M, L)    user indices per NOMA group, ascending id
* ``b_no``      (M, N)    NOMA bandwidth per group/slot, Hz
* ``b_o``/``b_oe`` (K, N) OMA / error-compensation bandwidth per user, Hz
* ``p_no``      (M, N, L) NOMA transmit power per group member, W
* ``r_no``      (M, N, L) NOMA spectral-efficiency targets, bit/s/Hz
* decode order within a group: descending gain, ties broken by user id

All rates are bit/s.  Zero assigned bandwidth always means zero rate
(continuous extension of B*log2(1 + snr/B) at B = 0).
"""
import numpy as np

LN2 = float(np.log(2.0))


def _pairwise_higher(g_m, members):
    """Mask (M, L, L, N): entry [m, l, j, n] true when member j decodes
    after member l would in downlink order, i.e. j has the higher gain
    (ties fall to the smaller user id)."""
    gj = g_m[:, None, :, :]
    gl = g_m[:, :, None, :]
    idj = members[:, None, :, None]
    idl = members[:, :, None, None]
    return (gj > gl) | ((gj == gl) & (idj < idl))


def _oma(b, p, g, n0):
    b = np.asarray(b, dtype=float)
    out = np.zeros(np.broadcast(b, p, g).shape)
    pos = b > 0
    snr = np.divide(p * g, n0 * b, out=np.zeros_like(out), where=pos)
    np.divide(b * np.log1p(snr), LN2, out=out, where=pos)
    return out


def rate_components(gains, members, b_no_dl, b_o_dl, b_oe_dl,
                    b_no_ul, b_o_ul, p_no_dl, p_o_dl, p_oe_dl,
                    p_no_ul, p_o_ul, n0, omega):
    """Per-user rate table pieces for one allocation.

    Returns (dl_noma, dl_oma, dl_oe, ul_noma, ul_oma), each (K, N).
    """
    K, N = gains.shape
    M, L = members.shape
    g_m = gains[members]                        # (M, L, N)
    higher = _pairwise_higher(g_m, members)

    # downlink: interference from stronger members at the receiver's own
    # gain; a residual fraction of the already-cancelled weaker signals
    # leaks through imperfect SIC
    p_dl = p_no_dl.transpose(0, 2, 1)           # (M, L, N)
    i_high = np.einsum("mljn,mjn->mln", higher, p_dl)
    i_res = p_dl.sum(axis=1)[:, None, :] - p_dl - i_high
    bno = b_no_dl[:, None, :]
    denom = (i_high + omega * i_res) * g_m + n0 * bno
    pos = (bno > 0) & (denom > 0)
    sinr = np.divide(p_dl * g_m, denom, out=np.zeros_like(denom), where=pos)
    r_dl = np.where(pos, L * bno * np.log1p(sinr) / LN2, 0.0)

    # uplink: the receiver subtracts stronger members first, so the
    # interference left is the weaker members heard at their own gains
    p_ul = p_no_ul.transpose(0, 2, 1)
    lower = higher.transpose(0, 2, 1, 3)
    i_low = np.einsum("mljn,mjn->mln", lower, p_ul * g_m)
    bnu = b_no_ul[:, None, :]
    denom_u = i_low + n0 * bnu
    pos_u = (bnu > 0) & (denom_u > 0)
    sinr_u = np.divide(p_ul * g_m, denom_u, out=np.zeros_like(denom_u), where=pos_u)
    r_ul = np.where(pos_u, L * bnu * np.log1p(sinr_u) / LN2, 0.0)

    dl_noma = np.zeros((K, N))
    ul_noma = np.zeros((K, N))
    for m in range(M):
        dl_noma[members[m]] = r_dl[m]
        ul_noma[members[m]] = r_ul[m]

    dl_oma = _oma(b_o_dl, p_o_dl, gains, n0)
    dl_oe = _oma(b_oe_dl, p_oe_dl, gains, n0)
    ul_oma = _oma(b_o_ul, p_o_ul, gains, n0)
    return dl_noma, dl_oma, dl_oe, ul_noma, ul_oma


def _decode_order(g_m, members):
    """(M, L, N) index array sorting each group's members by descending
    gain (user id breaks ties) per slot."""
    M, L, N = g_m.shape
    order = np.empty((M, L, N), dtype=np.intp)
    for m in range(M):
        ids = np.broadcast_to(members[m][:, None], (L, N))
        order[m] = np.lexsort((ids, -g_m[m]), axis=0)
    return order


def power_sums(r_no, r_o, gains, members, b_no, b_o, n0, want_derivs=False):
    """Minimum group transmit power to hit given spectral-efficiency targets.

    Exploits the telescoping structure of successive decoding: with members
    sorted by decreasing gain and noise-over-gain levels a_1 <= ... <= a_L,
    the group sum is  sum_l (a_l - a_{l-1}) 2^(suffix rate sum from l) - a_L.
    The same expression covers both links.  The OMA side adds the usual
    (2^r - 1) * noise/gain per user.

    Returns a dict with per-slot totals, per-group/per-user values and,
    when ``want_derivs``, gradients and Hessian blocks of the slot totals
    with respect to the rate targets.
    """
    M, N, L = r_no.shape
    K = gains.shape[0]
    g_m = gains[members]
    order = _decode_order(g_m, members)
    g_sorted = np.take_along_axis(g_m, order, axis=1)
    r_sorted = np.take_along_axis(r_no.transpose(0, 2, 1), order, axis=1)

    a = n0 * b_no[:, None, :] / g_sorted
    d = np.diff(a, axis=1, prepend=0.0)
    suffix = np.cumsum(r_sorted[:, ::-1, :], axis=1)[:, ::-1, :]
    terms = d * np.exp2(suffix)
    group_vals = terms.sum(axis=1) - a[:, -1, :]            # (M, N)

    pos_o = b_o > 0
    lvl_o = np.divide(n0 * b_o, gains, out=np.zeros_like(b_o), where=pos_o)
    oma_vals = (np.exp2(r_o) - 1.0) * lvl_o                  # (K, N)

    out = {
        "slot_totals": group_vals.sum(axis=0) + oma_vals.sum(axis=0),
        "group_vals": group_vals,
        "oma_vals": oma_vals,
    }
    if not want_derivs:
        return out

    cum = np.cumsum(terms, axis=1)                           # (M, L, N)
    grad_sorted = LN2 * cum
    grad_no = np.zeros_like(grad_sorted)
    np.put_along_axis(grad_no, order, grad_sorted, axis=1)
    out["grad_no"] = grad_no.transpose(0, 2, 1)              # (M, N, L)
    out["grad_o"] = LN2 * np.exp2(r_o) * lvl_o               # (K, N)

    lo = np.minimum(np.arange(L)[:, None], np.arange(L)[None, :])
    hess_sorted = LN2 * LN2 * cum[:, lo, :]                  # (M, L, L, N)
    inv = np.argsort(order, axis=1)
    h = np.take_along_axis(hess_sorted, inv[:, :, None, :], axis=1)
    h = np.take_along_axis(h, inv[:, None, :, :], axis=2)
    out["hess_no"] = h.transpose(0, 3, 1, 2)                 # (M, N, L, L)
    out["hess_o"] = LN2 * out["grad_o"]
    return out


def recover_noma_dl(r_no, gains, members, b_no, n0):
    """Exact per-member downlink NOMA powers for given targets, (M, N, L).

    Follows the decode recursion: each member's power is (2^r - 1) times
    the power already stacked below it plus its own noise-over-gain level.
    """
    M, N, L = r_no.shape
    g_m = gains[members]
    order = _decode_order(g_m, members)
    g_sorted = np.take_along_axis(g_m, order, axis=1)
    r_sorted = np.take_along_axis(r_no.transpose(0, 2, 1), order, axis=1)
    a = n0 * b_no[:, None, :] / g_sorted

    p_sorted = np.zeros((M, L, N))
    stacked = np.zeros((M, N))
    for l in range(L):
        p = (np.exp2(r_sorted[:, l, :]) - 1.0) * (stacked + a[:, l, :])
        p_sorted[:, l, :] = p
        stacked = stacked + p
    p_no = np.zeros_like(p_sorted)
    np.put_along_axis(p_no, order, p_sorted, axis=1)
    return p_no.transpose(0, 2, 1)


def recover_noma_ul(r_no, gains, members, b_no, n0):
    """Exact per-member uplink NOMA powers for given targets, (M, N, L).

    Closed form: 2^(sum of weaker members' rates) * (2^r - 1) * noise/gain.
    """
    M, N, L = r_no.shape
    g_m = gains[members]
    order = _decode_order(g_m, members)
    g_sorted = np.take_along_axis(g_m, order, axis=1)
    r_sorted = np.take_along_axis(r_no.transpose(0, 2, 1), order, axis=1)
    a = n0 * b_no[:, None, :] / g_sorted

    suffix = np.cumsum(r_sorted[:, ::-1, :], axis=1)[:, ::-1, :]
    suffix_excl = suffix - r_sorted
    p_sorted = np.exp2(suffix_excl) * (np.exp2(r_sorted) - 1.0) * a
    p_no = np.zeros_like(p_sorted)
    np.put_along_axis(p_no, order, p_sorted, axis=1)
    return p_no.transpose(0, 2, 1)
