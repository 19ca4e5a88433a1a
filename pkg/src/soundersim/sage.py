"""Iterative super-resolution extraction of specular paths.

Space-alternating EM flavor: paths are detected by successive
cancellation on the residual, then each path is re-optimized in turn on
its own "complete data" (residual plus its current contribution) by
coordinate-wise grid maximization of the matched-correlation score, with
the polarimetric gain matrix re-fit by linear least squares. Updates are
only accepted when they reduce the residual, so total residual power is
non-increasing across iterations by construction.

Delay and steering interact through the absolute RF frequencies: a path
seen by an element advanced along the arrival direction is simply a path
with a slightly smaller effective delay, which keeps every search a
correlation over the frequency axis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from soundersim.antenna import ChainArray, unit_direction, SPEED_OF_LIGHT
from soundersim.errors import InvalidConfigError
from soundersim.schedule import TimestampMap
from soundersim.tensors import ChannelTensor

_POL_PAIRS = ((0, 0), (0, 1), (1, 0), (1, 1))  # (rx comp, tx comp) = HH HV VH VV


@dataclass
class SageSettings:
    max_paths: int = 5
    convergence_threshold: float = 1e-4  # relative residual-power change
    dynamic_range_db: float = -25.0      # floor below the strongest path
    delay_resolution: float | None = None    # s, default 1/(2*bandwidth)
    doppler_resolution: float | None = None  # Hz, default 1/(2*S*T_rep)
    angle_resolution: float = math.radians(2.0)
    refine_factor: int = 8
    refine_stages: int = 2
    sweeps: int = 3
    delay_max: float | None = None       # default: unambiguous span 1/df
    doppler_max: float | None = None     # default: 0.5/T_rep

    def __post_init__(self):
        if self.dynamic_range_db >= 0:
            raise InvalidConfigError("dynamic-range floor must be negative dB")
        if self.angle_resolution <= 0 or self.refine_factor < 2:
            raise InvalidConfigError("bad grid settings")


@dataclass
class PathEstimate:
    tau: float
    doppler: float
    aod_az: float
    aod_el: float
    aoa_az: float
    aoa_el: float
    gain: np.ndarray
    power_db: float = 0.0
    iterations: int = 0


class _Channels:
    """Measured channels flattened to rows of an (N_c, F) matrix."""

    def __init__(self, h: ChannelTensor, geom: list[ChainArray], tmap: TimestampMap):
        rows = []
        meta = []
        for idx in h.measured_entries():
            p_t, p_r, m_t, m_r = idx
            for s in range(h.snapshots):
                rows.append(h.values[(s,) + idx + (slice(None),)])
                meta.append((s, p_t, p_r, m_t, m_r))
        self.x = np.asarray(rows, dtype=complex)
        self.freqs = np.asarray(h.freqs, dtype=float)
        self.t = np.array([tmap.t(*m) for m in meta])
        self.tx_pos = np.array([geom[m[1]].positions[m[3]] for m in meta])
        self.rx_pos = np.array([geom[m[2]].positions[m[4]] for m in meta])
        cent = [np.mean(g.positions, axis=0) for g in geom]
        self.tx_cent = np.array([cent[m[1]] for m in meta])
        self.rx_cent = np.array([cent[m[2]] for m in meta])
        self.tx_rel = self.tx_pos - self.tx_cent
        self.rx_rel = self.rx_pos - self.rx_cent
        self.tx_resp = [geom[m[1]].responses[m[3]] for m in meta]
        self.rx_resp = [geom[m[2]].responses[m[4]] for m in meta]
        self.n_c, self.n_f = self.x.shape
        self.tx_identifiable = (
            len({(id(r), tuple(p)) for r, p in zip(self.tx_resp, map(tuple, self.tx_pos))}) > 1
        )

    def eval_responses(self, resp_list, az, el) -> np.ndarray:
        """Per-channel (H, V) pattern at one direction, shared-object aware."""
        cache = {}
        out = np.empty((self.n_c, 2), dtype=complex)
        for i, resp in enumerate(resp_list):
            key = id(resp)
            if key not in cache:
                cache[key] = resp.eval(az, el)
            out[i] = cache[key]
        return out


def _pattern_products(ch: _Channels, p: PathEstimate, gain: np.ndarray) -> np.ndarray:
    a_t = ch.eval_responses(ch.tx_resp, p.aod_az, p.aod_el)
    a_r = ch.eval_responses(ch.rx_resp, p.aoa_az, p.aoa_el)
    return np.einsum("cp,pq,cq->c", a_r, gain, a_t)


def _advances(ch: _Channels, p: PathEstimate) -> tuple[np.ndarray, np.ndarray]:
    u_t = unit_direction(p.aod_az, p.aod_el)
    u_r = unit_direction(p.aoa_az, p.aoa_el)
    return ch.tx_pos @ u_t / SPEED_OF_LIGHT, ch.rx_pos @ u_r / SPEED_OF_LIGHT


def _model(ch: _Channels, p: PathEstimate) -> np.ndarray:
    g = _pattern_products(ch, p, p.gain)
    adv_t, adv_r = _advances(ch, p)
    tau_eff = p.tau - adv_t - adv_r
    phase = np.exp(-2j * np.pi * np.outer(tau_eff, np.ones(ch.n_f)) * ch.freqs)
    rot = np.exp(2j * np.pi * p.doppler * ch.t)
    return (g * rot)[:, None] * phase


def _score(ch: _Channels, x: np.ndarray, p: PathEstimate) -> float:
    w = _model(ch, replace(p, gain=_unit_gain(p.gain)))
    denom = np.vdot(w, w).real
    if denom <= 0:
        return 0.0
    return abs(np.vdot(w, x)) ** 2 / denom


def _unit_gain(gain: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(gain)
    return gain / norm if norm > 0 else np.eye(2, dtype=complex)


def _fit_gain(ch: _Channels, x: np.ndarray, p: PathEstimate) -> np.ndarray:
    """Least-squares 2x2 polarimetric gain for fixed geometry parameters.

    Unobservable components (e.g. cross-pol with single-pol arrays) come
    out as zero through the minimum-norm solution.
    """
    a_t = ch.eval_responses(ch.tx_resp, p.aod_az, p.aod_el)
    a_r = ch.eval_responses(ch.rx_resp, p.aoa_az, p.aoa_el)
    adv_t, adv_r = _advances(ch, p)
    tau_eff = p.tau - adv_t - adv_r
    base = np.exp(-2j * np.pi * tau_eff[:, None] * ch.freqs) * np.exp(
        2j * np.pi * p.doppler * ch.t
    )[:, None]
    cols = [
        ((a_r[:, pr] * a_t[:, pt])[:, None] * base).ravel()
        for pr, pt in _POL_PAIRS
    ]
    design = np.stack(cols, axis=1)
    coef, *_ = np.linalg.lstsq(design, x.ravel(), rcond=None)
    gain = np.zeros((2, 2), dtype=complex)
    for c, (pr, pt) in zip(coef, _POL_PAIRS):
        gain[pr, pt] = c
    return gain


def _refine_grid(center: float, step: float, factor: int, lo=None, hi=None) -> np.ndarray:
    grid = center + step * np.linspace(-1.0, 1.0, 2 * factor + 1)
    if lo is not None:
        grid = grid[grid >= lo]
    if hi is not None:
        grid = grid[grid <= hi]
    return grid


class _Sage:
    def __init__(self, ch: _Channels, settings: SageSettings, t_rep: float, snapshots: int):
        self.ch = ch
        self.s = settings
        bandwidth = ch.freqs.max() - ch.freqs.min()
        df = np.min(np.diff(np.sort(ch.freqs)))
        self.delay_step = settings.delay_resolution or 1.0 / (2.0 * bandwidth)
        self.delay_max = settings.delay_max or 1.0 / df
        self.doppler_span = settings.doppler_max or 0.5 / t_rep
        self.doppler_step = settings.doppler_resolution or 1.0 / (
            2.0 * max(snapshots, 1) * t_rep
        )
        self.search_doppler = snapshots > 1
        self.angle_step = settings.angle_resolution
        # coarse AoA/AoD direction grids over the sphere
        az = np.arange(-np.pi, np.pi, self.angle_step)
        el = np.arange(self.angle_step / 2, np.pi, self.angle_step)
        self.coarse_az, self.coarse_el = az, el

    # -- detection ----------------------------------------------------------

    def detect_delay(self, x: np.ndarray) -> float:
        """Noncoherent delay profile peak: robust before angles are known."""
        grid = np.arange(0.0, self.delay_max, self.delay_step)
        e = np.exp(2j * np.pi * np.outer(grid, self.ch.freqs))
        profile = np.sum(np.abs(x @ e.T) ** 2, axis=0)
        return float(grid[int(np.argmax(profile))])

    # -- coordinate searches ------------------------------------------------

    def _delay_scan(self, x: np.ndarray, p: PathEstimate, grid: np.ndarray) -> np.ndarray:
        ch = self.ch
        g = _pattern_products(ch, p, _unit_gain(p.gain))
        adv_t, adv_r = _advances(ch, p)
        weights = np.conj(g) * np.exp(-2j * np.pi * p.doppler * ch.t)
        z = (x * weights[:, None]) * np.exp(
            -2j * np.pi * (adv_t + adv_r)[:, None] * ch.freqs
        )
        zk = z.sum(axis=0)
        e = np.exp(2j * np.pi * np.outer(grid, ch.freqs))
        return np.abs(e @ zk)

    def search_delay(self, x: np.ndarray, p: PathEstimate) -> float:
        grid = np.arange(0.0, self.delay_max, self.delay_step)
        scores = self._delay_scan(x, p, grid)
        best = float(grid[int(np.argmax(scores))])
        step = self.delay_step
        for _ in range(self.s.refine_stages):
            step /= self.s.refine_factor
            grid = _refine_grid(best, step * self.s.refine_factor, self.s.refine_factor, lo=0.0)
            scores = self._delay_scan(x, p, grid)
            best = float(grid[int(np.argmax(scores))])
        return best

    def search_doppler_freq(self, x: np.ndarray, p: PathEstimate) -> float:
        if not self.search_doppler:
            return 0.0
        ch = self.ch
        g = _pattern_products(ch, p, _unit_gain(p.gain))
        adv_t, adv_r = _advances(ch, p)
        phase = np.exp(2j * np.pi * (p.tau - adv_t - adv_r)[:, None] * ch.freqs)
        q = np.conj(g) * (x * phase).sum(axis=1)

        def scan(grid):
            e = np.exp(-2j * np.pi * np.outer(grid, ch.t))
            return np.abs(e @ q)

        grid = np.arange(-self.doppler_span, self.doppler_span, self.doppler_step)
        best = float(grid[int(np.argmax(scan(grid)))])
        step = self.doppler_step
        for _ in range(self.s.refine_stages):
            step /= self.s.refine_factor
            grid = _refine_grid(best, step * self.s.refine_factor, self.s.refine_factor)
            best = float(grid[int(np.argmax(scan(grid)))])
        return best

    def _angle_scan(
        self, x: np.ndarray, p: PathEstimate, side: str,
        az_grid: np.ndarray, el_grid: np.ndarray,
    ) -> tuple[float, float]:
        """Exhaustive (az, el) scan for one link end, exact wideband.

        Element positions enter relative to their chain centroid; the
        centroid (bulk) advance stays at the current direction so the
        scan only weighs inter-element phase differences. The caller
        re-fits the delay afterwards, which absorbs the bulk change.
        """
        ch = self.ch
        gain = _unit_gain(p.gain)
        if side == "rx":
            pos, resp = ch.rx_rel, ch.rx_resp
            other = ch.eval_responses(ch.tx_resp, p.aod_az, p.aod_el)  # a_T
            fixed_adv = (
                ch.tx_pos @ unit_direction(p.aod_az, p.aod_el)
                + ch.rx_cent @ unit_direction(p.aoa_az, p.aoa_el)
            ) / SPEED_OF_LIGHT
            pol_vec = other @ gain.T  # gain @ a_T per channel -> contract with a_R
        else:
            pos, resp = ch.tx_rel, ch.tx_resp
            other = ch.eval_responses(ch.rx_resp, p.aoa_az, p.aoa_el)  # a_R
            fixed_adv = (
                ch.rx_pos @ unit_direction(p.aoa_az, p.aoa_el)
                + ch.tx_cent @ unit_direction(p.aod_az, p.aod_el)
            ) / SPEED_OF_LIGHT
            pol_vec = other @ gain  # a_R @ gain per channel -> contract with a_T
        xt = x * np.exp(2j * np.pi * (p.tau - fixed_adv)[:, None] * ch.freqs)
        xt = xt * np.exp(-2j * np.pi * p.doppler * ch.t)[:, None]

        # group channels sharing an element position
        groups: dict[tuple, list[int]] = {}
        for i in range(ch.n_c):
            groups.setdefault(tuple(pos[i]), []).append(i)

        pp, tt = np.meshgrid(az_grid, el_grid, indexing="ij")
        dirs = unit_direction(pp.ravel(), tt.ravel())  # (D, 3)
        n_dir = dirs.shape[0]

        # per-direction pattern of every distinct response object
        resp_cache = {}
        for r in resp:
            if id(r) not in resp_cache:
                resp_cache[id(r)] = r.eval(pp.ravel(), tt.ravel())  # (D, 2)

        corr = np.zeros(n_dir, dtype=complex)
        norm = np.zeros(n_dir)
        chunk = 2048
        for g_pos, members in groups.items():
            proj = dirs @ np.asarray(g_pos) / SPEED_OF_LIGHT  # (D,)
            xt_g = xt[members]
            for lo in range(0, n_dir, chunk):
                hi = lo + chunk
                e = np.exp(-2j * np.pi * np.outer(proj[lo:hi], ch.freqs))  # (d, F)
                inner = xt_g @ e.T  # (m, d)
                for row, ci in enumerate(members):
                    pat = resp_cache[id(resp[ci])][lo:hi]  # (d, 2)
                    g_dir = pat @ pol_vec[ci]  # (d,)
                    corr[lo:hi] += np.conj(g_dir) * inner[row]
                    norm[lo:hi] += np.abs(g_dir) ** 2
        # small regularizer breaks the planar-array mirror ambiguity: a
        # near-null pattern direction can only match by an absurd gain, so
        # penalize directions with vanishing pattern norm
        norm = norm * ch.n_f
        score = np.abs(corr) ** 2 / (norm + 1e-6 * max(norm.max(), 1e-300))
        best = int(np.argmax(score))
        return float(pp.ravel()[best]), float(tt.ravel()[best])

    def search_angles(self, x: np.ndarray, p: PathEstimate, side: str) -> tuple[float, float]:
        az, el = self._angle_scan(x, p, side, self.coarse_az, self.coarse_el)
        step = self.angle_step
        for _ in range(self.s.refine_stages):
            span = step
            step /= self.s.refine_factor
            az_grid = _refine_grid(az, span, self.s.refine_factor)
            el_grid = _refine_grid(el, span, self.s.refine_factor, lo=0.0, hi=np.pi)
            az, el = self._angle_scan(x, p, side, az_grid, el_grid)
        az = float((az + np.pi) % (2 * np.pi) - np.pi)
        if el < 1e-9 or el > np.pi - 1e-9:
            az = 0.0
        return az, el

    # -- per-path maximization ---------------------------------------------

    def maximize(self, x: np.ndarray, p: PathEstimate) -> PathEstimate:
        """One coordinate sweep; every accepted step must not degrade the
        matched-correlation score."""
        current = p

        def try_update(**kwargs) -> None:
            nonlocal current
            cand = replace(current, **kwargs)
            if _score(self.ch, x, cand) >= _score(self.ch, x, current):
                current = cand

        try_update(tau=self.search_delay(x, current))
        # angle updates move the bulk (centroid) advance, so they are only
        # accepted jointly with a delay re-fit at the new direction
        az, el = self.search_angles(x, current, "rx")
        cand = replace(current, aoa_az=az, aoa_el=el)
        try_update(aoa_az=az, aoa_el=el, tau=self.search_delay(x, cand))
        if self.ch.tx_identifiable:
            az, el = self.search_angles(x, current, "tx")
            cand = replace(current, aod_az=az, aod_el=el)
            try_update(aod_az=az, aod_el=el, tau=self.search_delay(x, cand))
        if self.search_doppler:
            try_update(doppler=self.search_doppler_freq(x, current))
        gain = _fit_gain(self.ch, x, current)
        return replace(current, gain=gain)


def _path_power_db(ch: _Channels, p: PathEstimate) -> float:
    m = _model(ch, p)
    return 10.0 * math.log10(max(np.mean(np.abs(m) ** 2), 1e-300))


def sage_estimate(
    h: ChannelTensor,
    geom: list[ChainArray],
    tmap: TimestampMap,
    settings: SageSettings | None = None,
) -> tuple[list[PathEstimate], ChannelTensor]:
    """Estimate specular path parameters from a calibrated tensor.

    Returns (paths ordered by descending power, residual tensor). An
    all-zero tensor yields an empty list.
    """
    settings = settings or SageSettings()
    if not np.all(np.isfinite(h.values)):
        raise InvalidConfigError("tensor contains non-finite entries")
    ch = _Channels(h, geom, tmap)
    engine = _Sage(ch, settings, tmap.T_rep, h.snapshots)

    residual = ch.x.copy()
    paths: list[PathEstimate] = []
    residual_power = [float(np.sum(np.abs(residual) ** 2))]
    strongest_db = None

    for _ in range(settings.max_paths):
        if residual_power[-1] <= 0:
            break
        seed = PathEstimate(
            tau=engine.detect_delay(residual), doppler=0.0,
            aod_az=0.0, aod_el=np.pi / 2, aoa_az=0.0, aoa_el=np.pi / 2,
            gain=np.eye(2, dtype=complex),
        )
        init = engine.maximize(residual, seed)
        cand_db = _path_power_db(ch, init)
        if strongest_db is not None and cand_db < strongest_db + settings.dynamic_range_db:
            break
        model = _model(ch, init)
        new_resid = residual - model
        if np.sum(np.abs(new_resid) ** 2) >= residual_power[-1]:
            break  # no explainable structure left
        paths.append(init)
        residual = new_resid
        residual_power.append(float(np.sum(np.abs(residual) ** 2)))
        if strongest_db is None:
            strongest_db = cand_db

        # SAGE cycles: re-optimize every path against its complete data
        for _sweep in range(settings.sweeps):
            for i, p in enumerate(paths):
                xl = residual + _model(ch, p)
                p_new = engine.maximize(xl, p)
                p_new = replace(p_new, iterations=p.iterations + 1)
                resid_new = xl - _model(ch, p_new)
                old_power = np.sum(np.abs(xl - _model(ch, p)) ** 2)
                if np.sum(np.abs(resid_new) ** 2) <= old_power:
                    paths[i] = p_new
                    residual = resid_new
                # else keep the old path; residual is unchanged
            total = float(np.sum(np.abs(residual) ** 2))
            if total > residual_power[-1] * (1 + 1e-12):
                raise AssertionError("residual power increased during SAGE sweep")
            change = (residual_power[-1] - total) / max(residual_power[-1], 1e-300)
            residual_power.append(total)
            if change < settings.convergence_threshold:
                break
        strongest_db = max(_path_power_db(ch, p) for p in paths)

    for p in paths:
        p.power_db = _path_power_db(ch, p)
    paths.sort(key=lambda p: (-p.power_db, p.tau))

    res_values = np.zeros_like(h.values)
    row = 0
    for idx in h.measured_entries():
        for s in range(h.snapshots):
            res_values[(s,) + idx + (slice(None),)] = residual[row]
            row += 1
    res_tensor = ChannelTensor(
        values=res_values, kind=h.kind, freqs=h.freqs,
        measured=h.measured.copy(),
        meta={"residual_power_trace": residual_power},
    )
    return paths, res_tensor
