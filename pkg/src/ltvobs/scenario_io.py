"""Scenario files and trajectory CSVs.

Scenario files are TOML with flat key paths mirroring the Scenario fields
(`dims.n`, `gains.K`, `A_B.entry.2.1 = {a = -1.0, b = 0.1, ...}`).  Entry
indices are 1-based; any (i, j) entry not listed is zero.  Angles are in
radians, time in seconds.  The built-in example written by `ltvobs example`
is the canonical reference file.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .sim import SimulationResult
from .truth import InputSignal, Scenario, ScenarioValidationError, SinusoidMatrix

__all__ = ["load_scenario", "save_scenario", "write_csv", "read_csv",
           "CsvFormatError"]


class CsvFormatError(ValueError):
    """Malformed trajectory CSV; message carries the line number."""


# --------------------------------------------------------------------------
# scenario reading
# --------------------------------------------------------------------------

def _matrix(data, key: str, shape, label: str | None = None) -> np.ndarray:
    label = label or key
    try:
        M = np.array(data[key], dtype=float)
    except KeyError:
        raise ScenarioValidationError(f"missing key {label!r}") from None
    if M.shape != tuple(shape):
        raise ScenarioValidationError(f"{label}: shape {M.shape}, expected {tuple(shape)}")
    return M


def _sinusoid_matrix(table: dict, key: str, size: int) -> SinusoidMatrix:
    parts = {name: np.zeros((size, size)) for name in ("a", "b", "omega", "phase")}
    entries = table.get("entry", {})
    for i_str, row in entries.items():
        for j_str, spec in row.items():
            try:
                i, j = int(i_str) - 1, int(j_str) - 1
            except ValueError:
                raise ScenarioValidationError(
                    f"{key}.entry: non-integer index {i_str!r}.{j_str!r}") from None
            if not (0 <= i < size and 0 <= j < size):
                raise ScenarioValidationError(
                    f"{key}.entry.{i_str}.{j_str}: index out of range for size {size}")
            for name in parts:
                parts[name][i, j] = float(spec.get(name, 0.0))
    return SinusoidMatrix(**parts)


def load_scenario(path) -> Scenario:
    """Load and validate a scenario file."""
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    try:
        dims = data["dims"]
        n = int(dims["n"])
        n_theta = int(dims["n_theta"])
        n_B = int(dims["n_B"])
        n_w = int(dims["n_w"])
        n_gamma = int(dims["n_gamma"])
        initial = data["initial"]
        gains = data["gains"]
        inp = data.get("input", {})
        noise = data.get("noise", {})
    except KeyError as exc:
        raise ScenarioValidationError(f"missing section/key {exc}") from None

    terms = inp.get("terms", [])
    u = InputSignal(
        constant=float(inp.get("constant", 0.0)),
        amplitudes=np.array([float(tm.get("amp", 0.0)) for tm in terms]),
        omegas=np.array([float(tm.get("omega", 0.0)) for tm in terms]),
        phases=np.array([float(tm.get("phase", 0.0)) for tm in terms]),
    )

    def opt_vector(key, length):
        if key not in data:
            return None
        v = np.array(data[key], dtype=float)
        if v.shape != (length,):
            raise ScenarioValidationError(f"{key}: shape {v.shape}, expected ({length},)")
        return v

    n_gamma_sz = n_gamma
    q = n_theta + n_B + n_gamma_sz
    p = q + n_gamma_sz * (n_theta + n_B)

    rho_readout = None
    if "rho_readout" in data:
        rho_readout = np.array(data["rho_readout"], dtype=float)
        if rho_readout.ndim != 2 or rho_readout.shape[1] != n_gamma_sz:
            raise ScenarioValidationError(
                f"rho_readout: shape {rho_readout.shape}, expected (*, {n_gamma_sz})")

    sc = Scenario(
        n=n, n_theta=n_theta, n_B=n_B, n_w=n_w, n_gamma=n_gamma_sz,
        A_theta=_sinusoid_matrix(data.get("A_theta", {}), "A_theta", n_theta),
        A_B=_sinusoid_matrix(data.get("A_B", {}), "A_B", n_B),
        h_theta=_matrix(data, "h_theta", (n, n_theta)),
        h_B=_matrix(data, "h_B", (n, n_B)),
        S=_matrix(data, "S", (n_w, n_w)),
        h_delta=_matrix(data, "h_delta", (n_w,)),
        C_gamma=_matrix(data, "C_gamma", (n_w, n_gamma_sz)),
        eta_true=_matrix(data, "eta_true", (n_gamma_sz,)),
        x0=_matrix(initial, "x", (n,), "initial.x"),
        x_theta0=_matrix(initial, "x_theta", (n_theta,), "initial.x_theta"),
        x_B0=_matrix(initial, "x_B", (n_B,), "initial.x_B"),
        w0=_matrix(initial, "w", (n_w,), "initial.w"),
        u=u,
        K=_matrix(gains, "K", (n,), "gains.K"),
        f=_matrix(gains, "f", (n_w,), "gains.f"),
        f0=float(gains["f0"]),
        alpha=float(gains["alpha"]),
        gamma=float(gains["gamma"]),
        noise_amplitude=float(noise.get("amplitude", 0.0)),
        noise_seed=int(noise.get("seed", 0)),
        theta_g0=opt_vector("theta_g0", p),
        theta_hat0=opt_vector("theta_hat0", q),
        rho_readout=rho_readout,
        name=str(data.get("name", Path(path).stem)),
    )
    sc.validate()
    return sc


# --------------------------------------------------------------------------
# scenario writing
# --------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    r = repr(float(v))
    return r


def _fmt_array(arr) -> str:
    arr = np.asarray(arr, dtype=float)
    if arr.ndim == 1:
        return "[" + ", ".join(_fmt(v) for v in arr) + "]"
    return "[" + ", ".join(_fmt_array(row) for row in arr) + "]"


def _sinusoid_lines(key: str, sm: SinusoidMatrix) -> list[str]:
    out = [f"[{key}]"]
    size = sm.shape[0]
    for i in range(size):
        for j in range(size):
            vals = (sm.a[i, j], sm.b[i, j], sm.omega[i, j], sm.phase[i, j])
            if not any(vals):
                continue
            a, b, om, ph = vals
            out.append(f"entry.{i + 1}.{j + 1} = "
                       f"{{a = {_fmt(a)}, b = {_fmt(b)}, omega = {_fmt(om)}, "
                       f"phase = {_fmt(ph)}}}")
    return out


def save_scenario(sc: Scenario, path) -> None:
    """Write a scenario as the canonical TOML file; load(save(sc)) round-trips
    field for field."""
    # top-level keys must precede the first table header, or TOML folds
    # them into that table
    lines = [
        f'name = "{sc.name}"',
        f"h_theta = {_fmt_array(sc.h_theta)}",
        f"h_B = {_fmt_array(sc.h_B)}",
        f"S = {_fmt_array(sc.S)}",
        f"h_delta = {_fmt_array(sc.h_delta)}",
        f"C_gamma = {_fmt_array(sc.C_gamma)}",
        f"eta_true = {_fmt_array(sc.eta_true)}",
    ]
    if sc.rho_readout is not None:
        lines.append(f"rho_readout = {_fmt_array(sc.rho_readout)}")
    if sc.theta_g0 is not None:
        lines.append(f"theta_g0 = {_fmt_array(sc.theta_g0)}")
    if sc.theta_hat0 is not None:
        lines.append(f"theta_hat0 = {_fmt_array(sc.theta_hat0)}")
    lines += [
        "",
        "[dims]",
        f"n = {sc.n}", f"n_theta = {sc.n_theta}", f"n_B = {sc.n_B}",
        f"n_w = {sc.n_w}", f"n_gamma = {sc.n_gamma}", "",
    ]
    lines += _sinusoid_lines("A_theta", sc.A_theta) + [""]
    lines += _sinusoid_lines("A_B", sc.A_B) + [""]
    lines += [
        "[initial]",
        f"x = {_fmt_array(sc.x0)}",
        f"x_theta = {_fmt_array(sc.x_theta0)}",
        f"x_B = {_fmt_array(sc.x_B0)}",
        f"w = {_fmt_array(sc.w0)}",
        "",
        "[input]",
        f"constant = {_fmt(sc.u.constant)}",
    ]
    if len(sc.u.amplitudes):
        terms = ", ".join(
            f"{{amp = {_fmt(a)}, omega = {_fmt(om)}, phase = {_fmt(ph)}}}"
            for a, om, ph in zip(sc.u.amplitudes, sc.u.omegas, sc.u.phases))
        lines.append(f"terms = [{terms}]")
    lines += [
        "",
        "[gains]",
        f"K = {_fmt_array(sc.K)}",
        f"f = {_fmt_array(sc.f)}",
        f"f0 = {_fmt(sc.f0)}",
        f"alpha = {_fmt(sc.alpha)}",
        f"gamma = {_fmt(sc.gamma)}",
        "",
        "[noise]",
        f"amplitude = {_fmt(sc.noise_amplitude)}",
        f"seed = {sc.noise_seed}",
        "",
    ]
    Path(path).write_text("\n".join(lines), encoding="utf-8")


# --------------------------------------------------------------------------
# trajectory CSV
# --------------------------------------------------------------------------

def csv_header(sc: Scenario) -> list[str]:
    return (["t", "u", "y"]
            + [f"x_{i + 1}" for i in range(sc.n)]
            + [f"xhat_{i + 1}" for i in range(sc.n)]
            + [f"thetahat_{i + 1}" for i in range(sc.q)]
            + ["param_err_norm", "state_err_norm", "Delta"])


def write_csv(res: SimulationResult, path) -> None:
    """Recorded trajectory as CSV ('.' decimal, no locale formatting);
    byte-identical for identical runs."""
    sc = res.scenario
    x = res.seg("x")
    x_hat = res.x_hat_series()
    theta_hat = res.seg("theta_hat")
    p_err = res.theta_err_norm()
    s_err = res.state_err_norm(x_hat)
    delta = res.delta_series()
    buf = io.StringIO()
    buf.write(",".join(csv_header(sc)) + "\n")
    for i in range(len(res.t)):
        row = ([res.t[i], res.u[i], res.y[i]]
               + list(x[i]) + list(x_hat[i]) + list(theta_hat[i])
               + [p_err[i], s_err[i], delta[i]])
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Parse a trajectory CSV back into (header, data); raises CsvFormatError
    with the offending line number."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError("line 1: missing header row") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise CsvFormatError(
                    f"line {lineno}: {len(row)} fields, expected {len(header)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise CsvFormatError(f"line {lineno}: {exc}") from None
    if not rows:
        raise CsvFormatError("no data rows")
    return header, np.array(rows)
