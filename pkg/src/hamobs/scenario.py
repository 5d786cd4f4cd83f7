"""Scenario files and the built-in experiment registry.

A scenario is a YAML document::

    version: 1
    name: fig1-2level
    system:
      omega: [0.5, -0.5]          # or hamiltonian: [[...], ...]
      dipole: [[0, 1], [1, 0]]    # or theta: [...] in pair order 12, 13, ..., 23, ...
      measured: [1]               # 1-based levels, default all
    control:
      tones: [{amplitude: 1, frequency: 1, waveform: sin}]
      # or resonant: {amplitude: 0.01, waveform: sin}
    measurement: {delay: 0, bias: 0, noise_sigma: 0, sample_period: null}
    estimator: {mode: full, Gamma: 1, gamma: 0.1, theta_hat0: [1.5], psi_hat0: [...]}
    initial_state: [...]
    integration: {horizon: 157.07963267948966, step: null}
    seeds: {measurement: 0, control: 0}

Complex entries are written ``"a+bi"``.  Unknown keys are rejected.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .errors import ScenarioError
from .estimator import MODES
from .integrate import IntegrationConfig
from .linalg import expm_antihermitian
from .system import ControlField, MeasurementModel, QuantumSystem, Tone, steps_in, theta_from_dipole

SCHEMA_VERSION = 1


@dataclass(frozen=True, eq=False)
class EstimatorSpec:
    """Estimator mode, gains and initial guesses.

    ``detuning`` overrides the per-pair detunings of the averaged mode
    (computed from the known spectrum otherwise).  ``theory`` must be set
    for ``second_averaged`` runs, which also take ``amplitude``.
    """

    mode: str
    Gamma: float
    gamma: tuple[float, ...]
    theta_hat0: tuple[float, ...]
    psi_hat0: tuple[complex, ...]
    detuning: tuple[float, ...] | None = None
    theory: bool = False
    amplitude: float | None = None


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    description: str
    system: QuantumSystem
    control: ControlField
    measurement: MeasurementModel
    estimator: EstimatorSpec
    psi0: tuple[complex, ...]
    integration: IntegrationConfig

    def to_dict(self) -> dict:
        return scenario_to_dict(self)

    def __eq__(self, other):
        return isinstance(other, Scenario) and self.to_dict() == other.to_dict()

    def with_seeds(self, measurement: int | None = None, control: int | None = None) -> Scenario:
        meas = self.measurement if measurement is None else replace(self.measurement, seed=int(measurement))
        ctrl = self.control if control is None else replace(self.control, seed=int(control))
        return replace(self, measurement=meas, control=ctrl)


# --- complex number notation ----------------------------------------------------


def format_complex(z) -> str | float:
    z = complex(z)
    if z.imag == 0.0:
        return float(z.real)
    im = repr(z.imag)
    if not im.startswith("-"):
        im = "+" + im
    return f"{z.real!r}{im}i"


def parse_complex(value, key: str) -> complex:
    if isinstance(value, bool):
        raise ScenarioError("expected a number", key)
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, str):
        s = value.strip().replace(" ", "")
        if s.endswith("i"):
            s = s[:-1] + "j"
            if s in ("j", "+j", "-j"):
                s = s.replace("j", "1j")
        try:
            return complex(s)
        except ValueError:
            pass
    raise ScenarioError(f"cannot parse {value!r} as a complex number 'a+bi'", key)


def _real(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"expected a real number, got {value!r}", key)
    if not math.isfinite(value):
        raise ScenarioError("must be finite", key)
    return float(value)


def _real_list(value, key: str) -> list[float]:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return [float(value)]
    if not isinstance(value, list):
        raise ScenarioError("expected a list of numbers", key)
    return [_real(v, f"{key}[{i}]") for i, v in enumerate(value)]


def _complex_list(value, key: str) -> list[complex]:
    if not isinstance(value, list):
        raise ScenarioError("expected a list", key)
    return [parse_complex(v, f"{key}[{i}]") for i, v in enumerate(value)]


def _matrix(value, key: str) -> np.ndarray:
    if not isinstance(value, list) or not all(isinstance(r, list) for r in value):
        raise ScenarioError("expected a matrix as a list of rows", key)
    rows = [_complex_list(r, f"{key}[{i}]") for i, r in enumerate(value)]
    if any(len(r) != len(rows) for r in rows):
        raise ScenarioError("matrix must be square", key)
    return np.array(rows, dtype=complex)


def _check_keys(d, allowed, key: str) -> dict:
    if d is None:
        return {}
    if not isinstance(d, dict):
        raise ScenarioError("expected a mapping", key)
    extra = sorted(set(d) - set(allowed))
    if extra:
        raise ScenarioError(f"unknown key(s) {extra}", f"{key}.{extra[0]}" if key else extra[0])
    return d


def _normalized(psi: list[complex], key: str) -> tuple[complex, ...]:
    norm = float(np.linalg.norm(psi))
    if abs(norm - 1.0) > 1e-9:
        raise ScenarioError(f"state is not normalized (norm {norm!r})", key)
    return tuple(psi)


# --- parsing --------------------------------------------------------------------


def _parse_system(d) -> QuantumSystem:
    d = _check_keys(d, {"omega", "hamiltonian", "dipole", "theta", "measured"}, "system")
    if ("omega" in d) == ("hamiltonian" in d):
        raise ScenarioError("give exactly one of omega or hamiltonian", "system")
    if "omega" in d:
        ham = np.diag(_real_list(d["omega"], "system.omega")).astype(complex)
    else:
        ham = _matrix(d["hamiltonian"], "system.hamiltonian")
    n = ham.shape[0]
    if ("dipole" in d) == ("theta" in d):
        raise ScenarioError("give exactly one of dipole or theta", "system")
    if "dipole" in d:
        mu = _matrix(d["dipole"], "system.dipole")
    else:
        from .system import dipole_from_theta

        theta = _real_list(d["theta"], "system.theta")
        try:
            mu = dipole_from_theta(theta, n)
        except ValueError as exc:
            raise ScenarioError(str(exc), "system.theta") from None
    measured = d.get("measured", list(range(1, n + 1)))
    if not isinstance(measured, list) or not all(isinstance(j, int) and 1 <= j <= n for j in measured):
        raise ScenarioError(f"levels must be integers in 1..{n}", "system.measured")
    try:
        return QuantumSystem(ham, mu, tuple(j - 1 for j in measured))
    except ValueError as exc:
        raise ScenarioError(str(exc), "system") from None


def resonant_tones(system: QuantumSystem, amplitude: float, waveform: str) -> tuple[Tone, ...]:
    """One tone per distinct transition frequency of the spectrum, ascending."""
    freqs = sorted(system.transition_frequencies())
    distinct = []
    for f in freqs:
        if not distinct or f - distinct[-1] > 1e-12 * max(1.0, f):
            distinct.append(f)
    return tuple(Tone(amplitude, float(f), waveform) for f in distinct)


def _parse_control(d, system: QuantumSystem, seed: int) -> ControlField:
    d = _check_keys(d, {"tones", "resonant", "amplitude_bias", "noise_sigma", "noise_hold"}, "control")
    if ("tones" in d) == ("resonant" in d):
        raise ScenarioError("give exactly one of tones or resonant", "control")
    try:
        if "tones" in d:
            if not isinstance(d["tones"], list):
                raise ScenarioError("expected a list of tones", "control.tones")
            tones = []
            for i, t in enumerate(d["tones"]):
                key = f"control.tones[{i}]"
                t = _check_keys(t, {"amplitude", "frequency", "waveform"}, key)
                tones.append(Tone(_real(t.get("amplitude"), f"{key}.amplitude"),
                                  _real(t.get("frequency"), f"{key}.frequency"), t.get("waveform", "cos")))
        else:
            r = _check_keys(d["resonant"], {"amplitude", "waveform"}, "control.resonant")
            tones = resonant_tones(system, _real(r.get("amplitude"), "control.resonant.amplitude"),
                                   r.get("waveform", "cos"))
        hold = d.get("noise_hold")
        return ControlField(tuple(tones), _real(d.get("amplitude_bias", 0.0), "control.amplitude_bias"),
                            _real(d.get("noise_sigma", 0.0), "control.noise_sigma"), seed,
                            None if hold is None else _real(hold, "control.noise_hold"))
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(str(exc), "control") from None


def _parse_measurement(d, seed: int) -> MeasurementModel:
    d = _check_keys(d, {"delay", "bias", "noise_sigma", "sample_period"}, "measurement")
    sp = d.get("sample_period")
    try:
        return MeasurementModel(
            delay=_real(d.get("delay", 0.0), "measurement.delay"),
            bias=_real(d.get("bias", 0.0), "measurement.bias"),
            noise_sigma=_real(d.get("noise_sigma", 0.0), "measurement.noise_sigma"),
            seed=seed,
            sample_period=None if sp is None else _real(sp, "measurement.sample_period"),
        )
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(str(exc), "measurement") from None


def _parse_estimator(d, system: QuantumSystem) -> EstimatorSpec:
    d = _check_keys(d, {"mode", "Gamma", "gamma", "theta_hat0", "dipole_hat0", "psi_hat0", "detuning",
                        "theory", "amplitude"}, "estimator")
    mode = d.get("mode", "full")
    if mode not in MODES:
        raise ScenarioError(f"mode must be one of {MODES}", "estimator.mode")
    npairs = len(system.pairs)
    if ("theta_hat0" in d) == ("dipole_hat0" in d):
        raise ScenarioError("give exactly one of theta_hat0 or dipole_hat0", "estimator")
    if "theta_hat0" in d:
        th = _real_list(d["theta_hat0"], "estimator.theta_hat0")
    else:
        th = [float(x) for x in theta_from_dipole(_matrix(d["dipole_hat0"], "estimator.dipole_hat0"))]
    if len(th) != npairs:
        raise ScenarioError(f"expected {npairs} couplings", "estimator.theta_hat0")
    gamma = _real_list(d.get("gamma"), "estimator.gamma")
    if len(gamma) == 1:
        gamma = gamma * npairs
    if len(gamma) != npairs:
        raise ScenarioError(f"expected 1 or {npairs} gains", "estimator.gamma")
    Gamma = _real(d.get("Gamma"), "estimator.Gamma")
    if Gamma <= 0 or min(gamma) <= 0:
        raise ScenarioError("gains must be strictly positive", "estimator")
    psi_hat = _normalized(_complex_list(d.get("psi_hat0"), "estimator.psi_hat0"), "estimator.psi_hat0")
    if len(psi_hat) != system.dim:
        raise ScenarioError(f"expected {system.dim} amplitudes", "estimator.psi_hat0")
    detuning = None
    if d.get("detuning") is not None:
        detuning = _real_list(d["detuning"], "estimator.detuning")
        if len(detuning) != npairs:
            raise ScenarioError(f"expected {npairs} detunings", "estimator.detuning")
        detuning = tuple(detuning)
    theory = d.get("theory", False)
    if not isinstance(theory, bool):
        raise ScenarioError("expected true or false", "estimator.theory")
    if mode == "second_averaged" and not theory:
        raise ScenarioError("second_averaged needs theory: true (it reads the true coupling)", "estimator.theory")
    amp = d.get("amplitude")
    return EstimatorSpec(mode, Gamma, tuple(gamma), tuple(th), psi_hat, detuning, theory,
                         None if amp is None else _real(amp, "estimator.amplitude"))


def _parse_integration(d) -> IntegrationConfig:
    d = _check_keys(d, {"horizon", "step", "record_stride", "renormalize"}, "integration")
    step = d.get("step")
    stride = d.get("record_stride")
    if stride is not None and (not isinstance(stride, int) or isinstance(stride, bool) or stride < 1):
        raise ScenarioError("must be a positive integer", "integration.record_stride")
    renorm = d.get("renormalize", True)
    if not isinstance(renorm, bool):
        raise ScenarioError("expected true or false", "integration.renormalize")
    try:
        return IntegrationConfig(_real(d.get("horizon"), "integration.horizon"),
                                 None if step is None else _real(step, "integration.step"), stride, renorm)
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(str(exc), "integration") from None


def scenario_from_dict(d) -> Scenario:
    d = _check_keys(d, {"version", "name", "description", "system", "control", "measurement", "estimator",
                        "initial_state", "integration", "seeds"}, "")
    if d.get("version") != SCHEMA_VERSION:
        raise ScenarioError(f"unsupported or missing version (expected {SCHEMA_VERSION})", "version")
    seeds = _check_keys(d.get("seeds"), {"measurement", "control"}, "seeds")
    for k in ("measurement", "control"):
        if not isinstance(seeds.get(k, 0), int) or isinstance(seeds.get(k, 0), bool):
            raise ScenarioError("seed must be an integer", f"seeds.{k}")
    system = _parse_system(d.get("system"))
    control = _parse_control(d.get("control"), system, seeds.get("control", 0))
    meas = _parse_measurement(d.get("measurement"), seeds.get("measurement", 0))
    est = _parse_estimator(d.get("estimator"), system)
    psi0 = _normalized(_complex_list(d.get("initial_state"), "initial_state"), "initial_state")
    if len(psi0) != system.dim:
        raise ScenarioError(f"expected {system.dim} amplitudes", "initial_state")
    integ = _parse_integration(d.get("integration"))
    scenario = Scenario(str(d.get("name", "unnamed")), str(d.get("description", "")), system, control, meas,
                        est, psi0, integ)
    validate_scenario(scenario)
    return scenario


def validate_scenario(scenario: Scenario) -> None:
    """Cross-field checks: the step must divide delay and sample period and
    resolve the fastest tone; the averaged mode needs a diagonal ``H``."""
    from .integrate import resolve_step

    est = scenario.estimator
    if est.mode == "averaged" and not scenario.system.is_diagonal:
        raise ScenarioError("averaged mode needs H diagonal in the measured basis", "estimator.mode")
    if est.mode in ("unnormalized", "second_averaged") and scenario.system.dim != 2:
        raise ScenarioError(f"{est.mode} mode is two-level only", "estimator.mode")
    if est.mode == "second_averaged":
        return
    try:
        h, _, _ = resolve_step(scenario)
    except ValueError as exc:
        raise ScenarioError(str(exc), "integration.step") from None
    checks = [("measurement.delay", scenario.measurement.delay),
              ("measurement.sample_period", scenario.measurement.sample_period),
              ("control.noise_hold", scenario.control.noise_hold)]
    for key, value in checks:
        if value:
            try:
                steps_in(value, h, key.split(".")[1])
            except ValueError as exc:
                raise ScenarioError(str(exc), key) from None


# --- writing --------------------------------------------------------------------


def _matrix_out(m) -> list:
    return [[format_complex(v) for v in row] for row in np.asarray(m)]


def scenario_to_dict(s: Scenario) -> dict:
    sysd: dict = {}
    if s.system.is_diagonal:
        sysd["omega"] = [float(x) for x in np.diag(s.system.hamiltonian).real]
    else:
        sysd["hamiltonian"] = _matrix_out(s.system.hamiltonian)
    sysd["dipole"] = _matrix_out(s.system.dipole.real)
    sysd["measured"] = [j + 1 for j in s.system.measured]
    est = s.estimator
    estd = {"mode": est.mode, "Gamma": est.Gamma, "gamma": [float(g) for g in est.gamma],
            "theta_hat0": [float(x) for x in est.theta_hat0],
            "psi_hat0": [format_complex(z) for z in est.psi_hat0]}
    if est.detuning is not None:
        estd["detuning"] = list(est.detuning)
    if est.theory:
        estd["theory"] = True
    if est.amplitude is not None:
        estd["amplitude"] = est.amplitude
    m = s.measurement
    integ = {"horizon": s.integration.horizon, "step": s.integration.step}
    if s.integration.record_stride is not None:
        integ["record_stride"] = s.integration.record_stride
    if not s.integration.renormalize:
        integ["renormalize"] = False
    return {
        "version": SCHEMA_VERSION,
        "name": s.name,
        "description": s.description,
        "system": sysd,
        "control": {
            "tones": [{"amplitude": t.amplitude, "frequency": t.frequency, "waveform": t.waveform}
                      for t in s.control.tones],
            "amplitude_bias": s.control.amplitude_bias,
            "noise_sigma": s.control.noise_sigma,
            "noise_hold": s.control.noise_hold,
        },
        "measurement": {"delay": m.delay, "bias": m.bias, "noise_sigma": m.noise_sigma,
                        "sample_period": m.sample_period},
        "estimator": estd,
        "initial_state": [format_complex(z) for z in s.psi0],
        "integration": integ,
        "seeds": {"measurement": m.seed, "control": s.control.seed},
    }


def dump_scenario(s: Scenario) -> str:
    return yaml.safe_dump(scenario_to_dict(s), sort_keys=False, default_flow_style=None, width=120)


def write_scenario(s: Scenario, path) -> Path:
    path = Path(path)
    path.write_text(dump_scenario(s), encoding="utf-8", newline="\n")
    return path


def load_scenario(path_or_name) -> Scenario:
    """Load a scenario file, or a built-in by name."""
    if isinstance(path_or_name, str) and path_or_name in BUILTINS:
        return builtin(path_or_name)
    path = Path(path_or_name)
    if not path.exists():
        raise ScenarioError(f"no such scenario file or built-in: {path_or_name}")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ScenarioError(f"parse error: {exc}") from None
    return scenario_from_dict(data)


def set_path(d: dict, path: str, value) -> dict:
    """Copy of scenario dict ``d`` with dotted ``path`` set to ``value``.

    List items are addressed by integer components, e.g.
    ``control.tones.0.frequency``.  A missing final key is created; the
    parser rejects it later if it is not a known field.
    """
    out = copy.deepcopy(d)
    node = out
    parts = path.split(".")
    for i, part in enumerate(parts):
        last = i == len(parts) - 1
        if isinstance(node, list):
            try:
                idx = int(part)
                node[idx]
            except (ValueError, IndexError):
                raise ScenarioError("path does not resolve", path) from None
            if last:
                node[idx] = value
            else:
                node = node[idx]
        elif isinstance(node, dict):
            if last:
                node[part] = value
            elif part in node:
                node = node[part]
            else:
                raise ScenarioError("path does not resolve", path)
        else:
            raise ScenarioError("path does not resolve", path)
    return out


# --- built-ins ------------------------------------------------------------------

_SQ = math.sqrt


TWO_LEVEL_STEP = 50 * math.pi / 100_000


def _two_level(name: str, description: str, **over) -> dict:
    d = {
        "version": SCHEMA_VERSION,
        "name": name,
        "description": description,
        "system": {"omega": [0.5, -0.5], "theta": [1.0], "measured": [1]},
        "control": {"tones": [{"amplitude": 1.0, "frequency": 1.0, "waveform": "sin"}]},
        "measurement": {},
        "estimator": {"mode": "full", "Gamma": 1.0, "gamma": 0.1, "theta_hat0": [1.5],
                      "psi_hat0": [1 / _SQ(5), 2 / _SQ(5)]},
        "initial_state": [1 / _SQ(2), 1 / _SQ(2)],
        "integration": {"horizon": 50 * math.pi, "step": TWO_LEVEL_STEP},
        "seeds": {"measurement": 0, "control": 0},
    }
    d.update(over)
    return d


def _fig3(gamma=1.0, name="fig3-3level", desc=None) -> dict:
    return {
        "version": SCHEMA_VERSION,
        "name": name,
        "description": desc or "Three-level identification, H=diag(0,1,3), u=0.1(sin t+sin 2t+sin 3t), "
                               "Gamma=0.05, gamma=1, T=1600",
        "system": {"omega": [0.0, 1.0, 3.0],
                   "dipole": [[0, 1.3, 1], [1.3, 0, -1.5], [1, -1.5, 0]]},
        "control": {"tones": [{"amplitude": 0.1, "frequency": f, "waveform": "sin"} for f in (1.0, 2.0, 3.0)]},
        "measurement": {},
        "estimator": {"mode": "full", "Gamma": 0.05, "gamma": gamma,
                      "dipole_hat0": [[0, 1.2, 0.9], [1.2, 0, -1.7], [0.9, -1.7, 0]],
                      "psi_hat0": [x / _SQ(14) for x in (1, 2, 3)]},
        "initial_state": [x / _SQ(30) for x in (1, 2, 5)],
        "integration": {"horizon": 1600.0, "step": 0.005},
        "seeds": {"measurement": 0, "control": 0},
    }


FOUR_LEVEL_H = [[0.0833, -0.0038, -0.0087, 0.0041],
                [-0.0038, 0.0647, 0.0083, 0.0038],
                [-0.0087, 0.0083, 0.0036, -0.0076],
                [0.0041, 0.0038, -0.0076, 0.0357]]
FOUR_LEVEL_MU = [[0, 5, -1, 0], [5, 0, 6, -1.5], [-1, 6, 0, 7], [0, -1.5, 7, 0]]
FOUR_LEVEL_GENERATOR = [[0, 1, -1, 1], [-1, 0, 1, 1], [1, -1, 0, -1], [-1, -1, 1, 0]]
FOUR_LEVEL_SPECTRUM = [0.0, 0.0365, 0.0651, 0.0857]


def four_level_basis_change() -> np.ndarray:
    """``exp`` of the anti-Hermitian generator used to print the 4-level ``H``."""
    return expm_antihermitian(np.array(FOUR_LEVEL_GENERATOR, dtype=complex))


def _fig5() -> dict:
    return {
        "version": SCHEMA_VERSION,
        "name": "fig5-4level",
        "description": "Four-level identification with the printed non-diagonal H, resonant sine tones "
                       "A=0.01 at all eigenvalue gaps, Gamma=1, gamma=0.5, T=1e5",
        "system": {"hamiltonian": FOUR_LEVEL_H, "dipole": FOUR_LEVEL_MU},
        "control": {"resonant": {"amplitude": 0.01, "waveform": "sin"}},
        "measurement": {},
        "estimator": {"mode": "full", "Gamma": 1.0, "gamma": 0.5,
                      "dipole_hat0": [[0, 6, -1.5, 0.05], [6, 0, 7, -2], [-1.5, 7, 0, 6], [0.05, -2, 6, 0]],
                      "psi_hat0": [x / _SQ(30) for x in (1, 2, 3, 4)]},
        "initial_state": [0.5, 0.5, 0.5, 0.5],
        "integration": {"horizon": 1.0e5, "step": 0.005},
        "seeds": {"measurement": 0, "control": 0},
    }


def _builtin_dicts() -> dict:
    fig1 = _two_level("fig1-2level",
                      "Two-level identification, theta=1, omega=1, Gamma=A=1, gamma=0.1, u=A sin(t), T=50 pi")
    fig6 = _two_level("fig6-noisy-meas", "fig1-2level with readout y(t)=p(t-0.3)+0.06+0.07w",
                      measurement={"delay": 0.3, "bias": 0.06, "noise_sigma": 0.07, "sample_period": 0.06},
                      integration={"horizon": 50 * math.pi, "step": 0.001},
                      seeds={"measurement": 1, "control": 0})
    fig7 = _two_level("fig7-noisy-control", "fig1-2level with field u(t)=(A+0.03)sin(t)+0.07w",
                      integration={"horizon": 50 * math.pi, "step": TWO_LEVEL_STEP / 2},
                      seeds={"measurement": 0, "control": 1})
    fig7["control"].update({"amplitude_bias": 0.03, "noise_sigma": 0.07, "noise_hold": 2 * math.pi / 100})
    detuned = _two_level(
        "detuned-2level",
        "Rotating-wave estimator, A=0.1, laser detuned from resonance by 0.01*A*theta",
        control={"tones": [{"amplitude": 0.1, "frequency": 1.0 - 0.01 * 0.1, "waveform": "sin"}]},
        estimator={"mode": "averaged", "Gamma": 0.05, "gamma": 0.1, "theta_hat0": [1.5],
                   "psi_hat0": [1 / _SQ(5), 2 / _SQ(5)]},
        integration={"horizon": 4000.0, "step": 0.02},
    )
    theory = _two_level(
        "theory-dynA2",
        "Second-averaged two-level system for checking the Lyapunov dissipation",
        estimator={"mode": "second_averaged", "Gamma": 1.0, "gamma": 0.1, "theta_hat0": [1.5],
                   "psi_hat0": [1 / _SQ(2), 1 / _SQ(2)], "theory": True, "amplitude": 1.0},
        initial_state=[1 / _SQ(5), 2 / _SQ(5)],
        integration={"horizon": 200.0, "step": 0.01},
    )
    fig3 = _fig3()
    fig3_alt = _fig3(0.5, "fig3-3level-gamma05", "fig3-3level with the alternate parameter gain gamma=0.5")
    return {d["name"]: d for d in (fig1, fig3, fig3_alt, _fig5(), fig6, fig7, detuned, theory)}


BUILTINS = _builtin_dicts()


def builtin(name: str) -> Scenario:
    try:
        return scenario_from_dict(copy.deepcopy(BUILTINS[name]))
    except KeyError:
        raise ScenarioError(f"unknown built-in scenario {name!r}") from None


def list_scenarios() -> list[tuple[str, str]]:
    return [(name, d["description"]) for name, d in BUILTINS.items()]
