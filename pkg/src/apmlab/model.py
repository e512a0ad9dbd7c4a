"""Model maps: a saddle T0, a global map T1 and the neighbourhood geometry.

JSON layout::

    {"saddle": {"lambda": 0.5, "betas": [], "orientation": 1},
     "global": {"family": "exact", "x_plus": 1, "y_minus": 1, "mu": 0,
                "b": -1, "c": 1, "d": 1, "sigma": 1, "f03": 0.2},
     "q": 1,
     "chart": {"eps_x": 0.25, "eps_y": 0.25}}

``orientation`` (sign of lambda*gamma) defaults to +1.  The "jet" family takes
the Taylor coefficients a..f03 directly.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ValidationError
from .globalmap import ExactGlobalMap, GlobalMapCoeffs, JetGlobalMap, validate_coeffs
from .saddle import SaddleNormalForm


@dataclass(frozen=True)
class Chart:
    """Half-widths of Pi+ = {|x - x+| <= eps_x, |y| <= eps_y} and
    Pi- = {|x| <= eps_x, |y - y-| <= eps_y}."""

    eps_x: float
    eps_y: float

    def __post_init__(self):
        if not (self.eps_x > 0 and self.eps_y > 0):
            raise ValidationError("chart half-widths must be positive")


@dataclass(frozen=True)
class ModelMap:
    saddle: SaddleNormalForm
    glob: ExactGlobalMap | JetGlobalMap
    q: int = 1
    chart: Chart | None = None

    def __post_init__(self):
        if self.chart is None:
            eps = 0.25 * min(self.glob.x_plus, self.glob.y_minus)
            object.__setattr__(self, "chart", Chart(eps, eps))
        if self.saddle.orientation == -1 and self.glob.b * self.glob.c > 0:
            raise ValidationError("locally non-orientable models take bc = -1")

    @property
    def lam(self) -> float:
        return self.saddle.lam

    @property
    def gamma(self) -> float:
        return self.saddle.gamma

    @property
    def mu(self) -> float:
        return self.glob.mu

    @property
    def coeffs(self) -> GlobalMapCoeffs:
        return self.glob.taylor()

    @property
    def symplectic(self) -> bool:
        return self.saddle.orientation == 1 and self.glob.b * self.glob.c < 0

    def with_mu(self, mu: float) -> "ModelMap":
        if isinstance(self.glob, JetGlobalMap):
            g = JetGlobalMap(dataclasses.replace(self.glob.coeffs, mu=float(mu)))
        else:
            g = dataclasses.replace(self.glob, mu=float(mu))
        return dataclasses.replace(self, glob=g)

    def replace_global(self, **changes) -> "ModelMap":
        return dataclasses.replace(self, glob=dataclasses.replace(self.glob, **changes))

    def chart_box(self) -> tuple[float, float]:
        """Half-widths of the box around the saddle that contains Pi+ and Pi-."""
        return self.glob.x_plus + self.chart.eps_x, self.glob.y_minus + self.chart.eps_y


def model_from_dict(data: dict) -> ModelMap:
    try:
        sd = data["saddle"]
        saddle = SaddleNormalForm(
            lam=float(sd["lambda"]),
            betas=tuple(float(b) for b in sd.get("betas", [])),
            orientation=int(sd.get("orientation", 1)),
        )
        gd = dict(data["global"])
        family = gd.pop("family", "exact")
        if family == "exact":
            glob = ExactGlobalMap(
                x_plus=float(gd["x_plus"]),
                y_minus=float(gd["y_minus"]),
                mu=float(gd.get("mu", 0.0)),
                b=float(gd["b"]),
                c=float(gd["c"]),
                d=float(gd["d"]),
                sigma=float(gd.get("sigma", 0.0)),
                f03=float(gd.get("f03", 0.0)),
            )
        elif family == "jet":
            gd.setdefault("mu", 0.0)
            coeffs = GlobalMapCoeffs(**{k: float(v) for k, v in gd.items()})
            diag = validate_coeffs(coeffs)
            if not diag.ok:
                raise ValidationError("; ".join(diag.issues))
            glob = JetGlobalMap(coeffs)
        else:
            raise ValidationError(f"unknown global map family {family!r}")
        chart = None
        if "chart" in data and data["chart"] is not None:
            chart = Chart(float(data["chart"]["eps_x"]), float(data["chart"]["eps_y"]))
        return ModelMap(saddle, glob, int(data.get("q", 1)), chart)
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed model description: {exc}") from exc


def model_to_dict(m: ModelMap) -> dict:
    saddle = {"lambda": m.saddle.lam, "betas": list(m.saddle.betas), "orientation": m.saddle.orientation}
    if isinstance(m.glob, JetGlobalMap):
        glob = {"family": "jet", **dataclasses.asdict(m.glob.coeffs)}
    else:
        glob = {"family": "exact", **dataclasses.asdict(m.glob)}
    return {
        "saddle": saddle,
        "global": glob,
        "q": m.q,
        "chart": {"eps_x": m.chart.eps_x, "eps_y": m.chart.eps_y},
    }


def load_model(path: str | Path) -> ModelMap:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed JSON in {path}: {exc}") from exc
    return model_from_dict(data)


def save_model(m: ModelMap, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(m), indent=2, sort_keys=True) + "\n")


def reference_model(alpha: float = 0.0, sigma: float = 1.0, f03: float = 0.2, mu: float = 0.0) -> ModelMap:
    """Symplectic reference: lambda = 1/2, c = 1, b = -1, d = 1, y- = 1, x+ = 1 + alpha."""
    return ModelMap(
        SaddleNormalForm(0.5),
        ExactGlobalMap(x_plus=1.0 + alpha, y_minus=1.0, mu=mu, b=-1.0, c=1.0, d=1.0, sigma=sigma, f03=f03),
    )
