#!/usr/bin/env python3
"""
nonneg-sdde pipeline
Runs the existence, non-negativity, kernel, simulation and region stages for
one validated model spec.
"""

from dataclasses import asdict
from typing import Any, Dict, Optional

import numpy as np

from logger import logger
from src.carma.carma import (
    carma21_verdict,
    carma_kernel,
    classify,
    corollary34,
    region_scan,
    sdde_form,
)
from src.characteristic.characteristic import (
    complete_monotonicity_check,
    discrete_delay_existence,
    zero_free,
)
from src.cli.model_spec import DEFAULT_T, ModelSpec, NumericsSpec
from src.config.config import SDDEConfig, get_config
from src.errors import OutsideRegimeError
from src.kernel.kernel import KernelGrid, default_horizon, kernel_fft, kernel_step_method, min_scan
from src.measure.delay_measure import first_moment, is_nonneg_on_positive, necessary_mass_check
from src.multivar.multivar import matrix_kernel_fft, thm41_check
from src.simulate.simulate import (
    PathSample,
    path_stats,
    simulate_euler,
    simulate_ma,
    simulate_ma_multivariate,
)

SCHEMA_VERSION = 1
DEFAULT_DT = 0.01


class NonNegPipeline:
    """Main pipeline for one model spec"""

    def __init__(self, spec: ModelSpec, config: Optional[SDDEConfig] = None, **overrides):
        """
        Initialize the pipeline

        Args:
            spec: validated model spec
            config: configuration object (optional, the process-wide one otherwise)
            overrides: command-line values (seed, dt, horizon, n_max, grid_step);
                they win over the spec's numerics block
        """
        self.spec = spec
        self.config = config or get_config()
        if not self.config.validate():
            raise ValueError(f"Invalid configuration: {self.config.get_invalid_fields()}")
        merged = spec.numerics_or_default().model_dump()
        merged.update({k: v for k, v in overrides.items() if v is not None})
        self.numerics = NumericsSpec(**merged)
        logger.info(f"Pipeline ready for a '{spec.kind}' model")

    # -- resolved numerics ---------------------------------------------------

    @property
    def seed(self) -> int:
        return self.config.seed if self.numerics.seed is None else self.numerics.seed

    @property
    def dt(self) -> float:
        return self.numerics.dt or DEFAULT_DT

    def _bundle(self, command: str) -> Dict[str, Any]:
        return {"schema": SCHEMA_VERSION, "command": command, "kind": self.spec.kind,
                "spec": self.spec.model_copy(update={"numerics": self.numerics}).normalized(self.config)}

    # -- check ---------------------------------------------------------------

    def check(self) -> Dict[str, Any]:
        """Verdict bundle for an sdde or carma model"""
        if self.spec.kind == "carma":
            return self._check_carma()
        if self.spec.kind == "msdde":
            return self.mcheck()

        phi = self.spec.to_delay_measure()
        bundle = self._bundle("check")
        zf = zero_free(phi)
        bundle["existence"] = {
            "zero_free": zf.verdict,
            "winding": zf.winding,
            "contour_radius": zf.contour_radius,
            "min_modulus_on_axis": zf.min_modulus_on_axis,
        }
        bundle["mass_check"] = {"total_mass": phi.total_mass(), "necessary_condition": necessary_mass_check(phi)}
        moment = first_moment(phi.eta)
        bundle["first_moment"] = {"value": moment.value, "violates_necessary_condition": moment.violates_necessary_condition}
        if len(phi.atoms) == 1 and not phi.density:
            (tau, xi), = phi.atoms
            try:
                bundle["discrete_delay"] = {"exists": discrete_delay_existence(phi.lambda0, xi, tau)}
            except OutsideRegimeError as e:
                bundle["discrete_delay"] = {"exists": None, "note": str(e)}

        sign = is_nonneg_on_positive(phi.eta)
        cm = complete_monotonicity_check(phi, n_max=self.numerics.n_max)
        arms: Dict[str, Any] = {
            "eta_nonneg": {"status": sign.status.value, "witness": sign.witness,
                           "numerically_verified": sign.numerically_verified},
            "complete_monotonicity": {
                "verdict": cm.verdict,
                "n_checked": cm.n_checked,
                "failure": asdict(cm.failure) if cm.failure else None,
            },
        }
        if not zf.verdict:
            bundle["arms"] = arms
            bundle["verdict"] = "non-stationary"
            return bundle

        g = self._sdde_kernel(phi)
        t_min, g_min = min_scan(g)
        tol = max(self.config.kernel_tolerance, g.meta.error_estimate or 0.0)
        arms["kernel_scan"] = {"method": g.meta.method, "horizon": g.horizon, "dt": g.dt,
                               "t_min": t_min, "g_min": g_min, "nonneg": g_min >= -tol}
        bundle["arms"] = arms
        nonneg = sign.is_yes or (cm.verdict and g_min >= -tol)
        bundle["verdict"] = "non-negative" if nonneg else "not non-negative"
        logger.info(f"check verdict: {bundle['verdict']}")
        return bundle

    def _check_carma(self) -> Dict[str, Any]:
        m = self.spec.to_carma()
        bundle = self._bundle("check")
        verdict = classify(m)
        bundle["existence"] = {"causal": True, "invertible": m.is_invertible}
        bundle["arms"] = {
            "ball_tsai": verdict.by_ordering,
            "thm31": verdict.by_thm31,
            "cor34": verdict.by_cor34,
            "kernel_scan": verdict.by_kernel_scan,
        }
        if m.p == m.q + 1 and m.is_invertible:
            lambda0, f = sdde_form(m)
            bundle["sdde_form"] = {"lambda": lambda0, "f": [asdict(t) for t in f]}
        if m.p == 3 and m.q == 2 and m.is_invertible:
            bundle["cor34_reason"] = corollary34(m).reason
        if m.p == 2 and m.q == 1:
            nec_suff, thm31 = carma21_verdict(m)
            bundle["carma21"] = {"nec_suff": nec_suff, "thm31": thm31}
        bundle["notes"] = list(verdict.notes)
        bundle["verdict"] = "non-negative" if verdict.by_kernel_scan else "not non-negative"
        return bundle

    # -- kernel ----------------------------------------------------------------

    def _carma_horizon(self, m) -> float:
        return self.numerics.horizon or self.config.horizon_factor / min(abs(a.real) for a in m.ar_zeros)

    def _sdde_kernel(self, phi, n_points: Optional[int] = None) -> KernelGrid:
        horizon = self.numerics.horizon or default_horizon(phi)
        if self.numerics.method == "step":
            return kernel_step_method(phi, horizon, self.numerics.dt or horizon / 40_000)
        n = n_points or self.numerics.n_points
        if n is None and self.numerics.dt is not None:
            n = int(round(horizon / self.numerics.dt))
        return kernel_fft(phi, horizon, n)

    def kernel(self):
        """KernelGrid for sdde/carma, MatrixKernelGrid for msdde"""
        kind = self.spec.kind
        if kind == "sdde":
            return self._sdde_kernel(self.spec.to_delay_measure())
        if kind == "carma":
            m = self.spec.to_carma()
            if self.numerics.dt is not None:
                horizon = self._carma_horizon(m)
                return carma_kernel(m, horizon, max(2, int(round(horizon / self.numerics.dt))))
            return carma_kernel(m, self.numerics.horizon)
        n = self.numerics.n_points
        if n is None and self.numerics.dt is not None and self.numerics.horizon is not None:
            n = int(round(self.numerics.horizon / self.numerics.dt))
        return matrix_kernel_fft(self.spec.to_matrix_measure(), self.numerics.horizon, n)

    # -- simulate --------------------------------------------------------------

    def simulate(self) -> PathSample:
        kind = self.spec.kind
        T = self.numerics.T or DEFAULT_T
        dt = self.dt
        if kind == "msdde":
            phi = self.spec.to_matrix_measure()
            decay = float(np.min(np.real(np.linalg.eigvals(phi.Lambda))))
            horizon = self.numerics.horizon or self.config.horizon_factor / (decay if decay > 0 else 1.0)
            kernels = matrix_kernel_fft(phi, horizon, max(2, int(round(horizon / dt))))
            path = simulate_ma_multivariate(kernels, self.spec.to_subordinators(), T, self.seed)
        elif kind == "carma":
            m = self.spec.to_carma()
            horizon = self._carma_horizon(m)
            g = carma_kernel(m, horizon, max(2, int(round(horizon / dt))))
            path = simulate_ma(g, self.spec.to_subordinator(), T, self.seed)
        else:
            phi = self.spec.to_delay_measure()
            if self.numerics.scheme == "euler":
                path = simulate_euler(phi, self.spec.to_subordinator(), T, dt, self.seed, self.numerics.burn_in)
            else:
                horizon = self.numerics.horizon or default_horizon(phi)
                g = kernel_fft(phi, horizon, max(2, int(round(horizon / dt))))
                path = simulate_ma(g, self.spec.to_subordinator(), T, self.seed)
        stats = path_stats(path)
        logger.info(f"Simulated path: min={stats.min:.4g}, mean={stats.mean:.4g}, "
                    f"fraction negative={stats.fraction_negative:.3g}")
        return path

    # -- region / mcheck -------------------------------------------------------

    def region(self):
        if self.spec.kind != "carma" or self.spec.region is None:
            raise ValueError("the region command needs a carma spec with a 'region' block")
        scan = self.spec.to_region()
        if self.numerics.grid_step is not None:
            scan = type(scan)(scan.alpha, scan.beta_min, scan.beta_max, self.numerics.grid_step, scan.beta2)
        return region_scan(scan)

    def mcheck(self) -> Dict[str, Any]:
        if self.spec.kind != "msdde":
            raise ValueError("mcheck needs an msdde spec")
        phi = self.spec.to_matrix_measure()
        bundle = self._bundle("mcheck")
        verdict = thm41_check(phi)
        bundle["existence"] = {"det_zero_free": verdict.zero_free}
        bundle["arms"] = {
            "eta_nonneg": verdict.eta_nonneg,
            "m_matrix": asdict(verdict.m_matrix),
        }
        if verdict.zero_free:
            grid = matrix_kernel_fft(phi, self.numerics.horizon, self.numerics.n_points)
            minima = grid.values.min(axis=0)
            bundle["kernel_entry_minima"] = minima.tolist()
        bundle["notes"] = list(verdict.notes)
        bundle["verdict"] = "non-negative" if verdict.nonneg else "not established"
        return bundle
