"""Achievable-rate model: NOMA/OMA rates for both links as pure functions.

Scalar operations (``dl_noma_rate`` etc.) are written out directly so tests
can cross-check the vectorized tables in :mod:`uavhmma.kernels` against an
independent second route.  Everything is bit/s with bandwidth in Hz; no
normalization is hidden inside the functions.

Successive-cancellation ordering: in the downlink a user only sees
interference from group members with higher channel gain (weaker signals
are decoded and subtracted first, leaving an ``omega`` fraction behind when
SIC is imperfect); in the uplink the base station decodes the strongest
first, so a member only sees the weaker members.  Equal gains are ordered
by ascending user id.
"""
import csv
from dataclasses import dataclass, fields

import numpy as np

from . import kernels
from .kernels import LN2


# ---------------------------------------------------------------------------
# allocation containers


def _zeros(shape):
    return np.zeros(shape)


@dataclass
class BandwidthPlan:
    """Per-slot bandwidth assignment in Hz.

    ``dl_noma``/``ul_noma`` are (M, N) group shares; ``dl_oma``/``ul_oma``
    are (K, N) per-user compensation slices; ``dl_oe`` is the extra (K, N)
    slice compensating SIC error propagation (all-zero outside E-HMMA).
    """

    dl_noma: np.ndarray
    dl_oma: np.ndarray
    dl_oe: np.ndarray
    ul_noma: np.ndarray
    ul_oma: np.ndarray

    @classmethod
    def zeros(cls, scenario):
        m, k, n = scenario.num_groups, scenario.num_users, scenario.num_slots
        return cls(_zeros((m, n)), _zeros((k, n)), _zeros((k, n)),
                   _zeros((m, n)), _zeros((k, n)))

    def dl_link_total(self):
        """Per-slot downlink bandwidth (N,)."""
        return self.dl_noma.sum(axis=0) + self.dl_oma.sum(axis=0) + self.dl_oe.sum(axis=0)

    def ul_link_total(self):
        return self.ul_noma.sum(axis=0) + self.ul_oma.sum(axis=0)

    def slot_total(self):
        return self.dl_link_total() + self.ul_link_total()

    def max_budget_violation(self, scenario):
        """Worst per-slot overshoot of the shared spectrum budget, Hz."""
        over = self.slot_total() - scenario.total_bandwidth
        neg = -min(
            a.min(initial=0.0) for a in
            (self.dl_noma, self.dl_oma, self.dl_oe, self.ul_noma, self.ul_oma)
        )
        return max(float(over.max(initial=0.0)), float(neg))


@dataclass
class PowerPlan:
    """Transmit powers in W mirroring the bandwidth layout.

    NOMA entries are (M, N, L), indexed by fixed group member slot
    (``scenario.groups[m][l]``); OMA/OE entries are (K, N).
    """

    dl_noma: np.ndarray
    dl_oma: np.ndarray
    dl_oe: np.ndarray
    ul_noma: np.ndarray
    ul_oma: np.ndarray

    @classmethod
    def zeros(cls, scenario):
        m, k, n = scenario.num_groups, scenario.num_users, scenario.num_slots
        ll = scenario.group_size
        return cls(_zeros((m, n, ll)), _zeros((k, n)), _zeros((k, n)),
                   _zeros((m, n, ll)), _zeros((k, n)))

    def dl_slot_total(self):
        return (self.dl_noma.sum(axis=(0, 2)) + self.dl_oma.sum(axis=0)
                + self.dl_oe.sum(axis=0))

    def ul_slot_total(self):
        return self.ul_noma.sum(axis=(0, 2)) + self.ul_oma.sum(axis=0)

    def max_budget_violation(self, scenario):
        """Worst overshoot of either link's per-slot power budget, W."""
        over_dl = self.dl_slot_total() - scenario.dl_power_budget
        over_ul = self.ul_slot_total() - scenario.ul_power_budget
        neg = -min(
            a.min(initial=0.0) for a in
            (self.dl_noma, self.dl_oma, self.dl_oe, self.ul_noma, self.ul_oma)
        )
        return max(float(over_dl.max(initial=0.0)),
                   float(over_ul.max(initial=0.0)), float(neg))


@dataclass
class RateTable:
    """Per-user per-slot rates in bit/s, broken down by access mode."""

    dl_noma: np.ndarray
    dl_oma: np.ndarray
    dl_oe: np.ndarray
    ul_noma: np.ndarray
    ul_oma: np.ndarray

    @property
    def dl_total(self):
        return self.dl_noma + self.dl_oma + self.dl_oe

    @property
    def ul_total(self):
        return self.ul_noma + self.ul_oma

    def user_averages(self):
        """(avg_dl, avg_ul), each (K,)."""
        return self.dl_total.mean(axis=1), self.ul_total.mean(axis=1)

    def min_average_rate(self):
        """Smallest per-user average over both links: the max-min objective."""
        avg_dl, avg_ul = self.user_averages()
        return float(min(avg_dl.min(), avg_ul.min()))

    def group_ul_totals(self, scenario):
        """Per-group uplink sum rates including compensation, (M, N)."""
        out = np.zeros((scenario.num_groups, scenario.num_slots))
        for m, members in enumerate(scenario.groups):
            out[m] = self.ul_total[list(members)].sum(axis=0)
        return out

    def write_csv(self, path, manifest_id=""):
        with open(path, "w", newline="") as fh:
            if manifest_id:
                fh.write(f"# manifest: {manifest_id}\n")
            w = csv.writer(fh)
            w.writerow(["slot", "user", "link", "noma_rate_bps",
                        "oma_rate_bps", "oe_rate_bps", "total_bps"])
            k, n = self.dl_noma.shape
            for slot in range(n):
                for user in range(k):
                    w.writerow([slot, user, "dl",
                                _fmt(self.dl_noma[user, slot]),
                                _fmt(self.dl_oma[user, slot]),
                                _fmt(self.dl_oe[user, slot]),
                                _fmt(self.dl_total[user, slot])])
                for user in range(k):
                    w.writerow([slot, user, "ul",
                                _fmt(self.ul_noma[user, slot]),
                                _fmt(self.ul_oma[user, slot]),
                                "0",
                                _fmt(self.ul_total[user, slot])])


def _fmt(x):
    return format(float(x), ".10g")


# ---------------------------------------------------------------------------
# scalar rate expressions (reference route, used directly for small cases)


def decode_order(gains, ids=None):
    """Group-internal decode order: indices by descending gain, id tiebreak."""
    gains = np.asarray(gains, dtype=float)
    ids = np.arange(len(gains)) if ids is None else np.asarray(ids)
    return sorted(range(len(gains)), key=lambda i: (-gains[i], ids[i]))


def oma_rate(gain, bandwidth, power, n0):
    """Single-user rate B*log2(1 + P*H/(N0*B)); zero at zero bandwidth."""
    if bandwidth <= 0.0 or power <= 0.0:
        return 0.0
    return bandwidth * np.log1p(power * gain / (n0 * bandwidth)) / LN2


def dl_noma_rate(gains, powers, bandwidth, member, n0, omega=0.0, ids=None,
                 l_mult=None):
    """Downlink NOMA rate of one group member at one slot.

    ``gains``/``powers`` are the group's per-member vectors.  Stronger
    members interfere at full power; an ``omega`` fraction of the weaker
    (already cancelled) members' power leaks back in under imperfect SIC.
    """
    gains = np.asarray(gains, dtype=float)
    powers = np.asarray(powers, dtype=float)
    ll = len(gains) if l_mult is None else l_mult
    if bandwidth <= 0.0:
        return 0.0
    ids = np.arange(len(gains)) if ids is None else np.asarray(ids)
    g, pid = gains[member], ids[member]
    stronger = (gains > g) | ((gains == g) & (ids < pid))
    weaker = ~stronger
    weaker[member] = False
    interference = powers[stronger].sum() + omega * powers[weaker].sum()
    sinr = powers[member] * g / (interference * g + n0 * bandwidth)
    return ll * bandwidth * np.log1p(sinr) / LN2


def ul_noma_rate(gains, powers, bandwidth, member, n0, ids=None, l_mult=None):
    """Uplink NOMA rate of one member: weaker members remain as interference."""
    gains = np.asarray(gains, dtype=float)
    powers = np.asarray(powers, dtype=float)
    ll = len(gains) if l_mult is None else l_mult
    if bandwidth <= 0.0:
        return 0.0
    ids = np.arange(len(gains)) if ids is None else np.asarray(ids)
    g, pid = gains[member], ids[member]
    weaker = (gains < g) | ((gains == g) & (ids > pid))
    interference = (powers[weaker] * gains[weaker]).sum()
    sinr = powers[member] * g / (interference + n0 * bandwidth)
    return ll * bandwidth * np.log1p(sinr) / LN2


def ul_group_sum_rate(gains, powers, bandwidth, n0, l_mult=None):
    """Uplink sum rate of a whole group: interference telescopes away."""
    gains = np.asarray(gains, dtype=float)
    powers = np.asarray(powers, dtype=float)
    ll = len(gains) if l_mult is None else l_mult
    if bandwidth <= 0.0:
        return 0.0
    snr = (powers * gains).sum() / (n0 * bandwidth)
    return ll * bandwidth * np.log1p(snr) / LN2


# ---------------------------------------------------------------------------
# vectorized tables


def total_rates(scenario, trajectory, bandwidth, powers, omega=None):
    """Full :class:`RateTable` for an allocation pair along a trajectory.

    ``omega`` overrides the scenario's SIC residual (the uplink is always
    decoded cleanly at the base station).
    """
    omega = scenario.sic_residual if omega is None else float(omega)
    gains = scenario.channel_gains(trajectory)
    members = np.array([list(g) for g in scenario.groups], dtype=np.intp)
    parts = kernels.rate_components(
        gains, members,
        bandwidth.dl_noma, bandwidth.dl_oma, bandwidth.dl_oe,
        bandwidth.ul_noma, bandwidth.ul_oma,
        powers.dl_noma, powers.dl_oma, powers.dl_oe,
        powers.ul_noma, powers.ul_oma,
        scenario.noise_density, omega,
    )
    return RateTable(*parts)


def equal_density_coeffs(scenario, gains, b_dl_n, b_ul_n, omega=0.0):
    """Per-Hz rate factors under bandwidth-proportional power.

    When transmit power rides the bandwidth at density P_t / B_link, every
    rate becomes linear in its bandwidth variable with these log2(1+sinr)
    coefficients.  Returns (c_nd, c_od, c_nu, c_ou), each (K, N); the
    error-compensation slice shares ``c_od``.
    """
    theta = scenario.power_split
    n0 = scenario.noise_density
    pt_dl, pt_ul = scenario.dl_power_budget, scenario.ul_power_budget
    members = np.array([list(g) for g in scenario.groups], dtype=np.intp)
    g_m = gains[members]                                     # (M, L, N)
    higher = kernels._numpy_backend._pairwise_higher(g_m, members)
    th = theta[members]                                      # (M, L)

    i_high = np.einsum("mljn,mj->mln", higher, th) * pt_dl
    i_res = (th.sum(axis=1)[:, None] - th)[:, :, None] * pt_dl - i_high
    denom = i_high + omega * i_res + n0 * b_dl_n[None, None, :] / g_m
    sinr_dl = th[:, :, None] * pt_dl / denom

    lower = higher.transpose(0, 2, 1, 3)
    i_low = np.einsum("mljn,mjn->mln", lower, th[:, :, None] * pt_ul * g_m)
    sinr_ul = th[:, :, None] * pt_ul * g_m / (i_low + n0 * b_ul_n[None, None, :])

    K, N = gains.shape
    c_nd = np.zeros((K, N))
    c_nu = np.zeros((K, N))
    for m in range(members.shape[0]):
        c_nd[members[m]] = np.log1p(sinr_dl[m]) / LN2
        c_nu[members[m]] = np.log1p(sinr_ul[m]) / LN2
    c_od = np.log1p(pt_dl * gains / (n0 * b_dl_n[None, :])) / LN2
    c_ou = np.log1p(pt_ul * gains / (n0 * b_ul_n[None, :])) / LN2
    return c_nd, c_od, c_nu, c_ou


def equal_density_rates(scenario, gains, bandwidth, b_dl_n, b_ul_n, omega=0.0):
    """Rates of a bandwidth plan under bandwidth-proportional power.

    Linear in the plan given the per-slot link bandwidths held in the sinr
    terms.  Returns a :class:`RateTable`.
    """
    c_nd, c_od, c_nu, c_ou = equal_density_coeffs(scenario, gains, b_dl_n, b_ul_n, omega)
    group = scenario.group_of_user
    ll = scenario.group_size
    bnd_user = bandwidth.dl_noma[group]                       # (K, N)
    bnu_user = bandwidth.ul_noma[group]
    return RateTable(
        dl_noma=ll * bnd_user * c_nd,
        dl_oma=bandwidth.dl_oma * c_od,
        dl_oe=bandwidth.dl_oe * c_od,
        ul_noma=ll * bnu_user * c_nu,
        ul_oma=bandwidth.ul_oma * c_ou,
    )


def equal_density_powers(scenario, bandwidth):
    """Power plan spreading each link budget uniformly over its used band.

    Group NOMA power splits between members by the configured ratios.  The
    per-slot density is P_t over the link's own assigned total, so the full
    budget is spent whenever any bandwidth is assigned.
    """
    plan = PowerPlan.zeros(scenario)
    b_dl = np.maximum(bandwidth.dl_link_total(), 0.0)
    b_ul = np.maximum(bandwidth.ul_link_total(), 0.0)
    dens_dl = np.divide(scenario.dl_power_budget, b_dl,
                        out=np.zeros_like(b_dl), where=b_dl > 0)
    dens_ul = np.divide(scenario.ul_power_budget, b_ul,
                        out=np.zeros_like(b_ul), where=b_ul > 0)
    theta = scenario.power_split
    for m, members in enumerate(scenario.groups):
        th = theta[list(members)]
        plan.dl_noma[m] = bandwidth.dl_noma[m][:, None] * dens_dl[:, None] * th[None, :]
        plan.ul_noma[m] = bandwidth.ul_noma[m][:, None] * dens_ul[:, None] * th[None, :]
    plan.dl_oma = bandwidth.dl_oma * dens_dl[None, :]
    plan.dl_oe = bandwidth.dl_oe * dens_dl[None, :]
    plan.ul_oma = bandwidth.ul_oma * dens_ul[None, :]
    return plan
