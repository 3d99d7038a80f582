"""Command line runner: ``nchardy verify --suite NAME [options]``.

Exit codes: 0 when every suite passes, 1 when a check fails, 2 for a bad
configuration or an unwritable output.  A report is written whenever the
configuration is valid.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict, dataclass, field

from . import suites
from .reports import NormReport, emit_report

FORMATS = ("json", "csv")
_ALIASES = {
    "coneRefinement": "cone_refine",
    "cone-refine": "cone_refine",
    "ensembleSize": "ensemble",
    "ensemble_size": "ensemble",
}
_INT_KEYS = ("d", "J", "K", "seed", "cone_refine", "ensemble")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    suite: str = "all"
    d: int = 2
    J: int = 1
    K: int = 6
    seed: int = 0
    cone_refine: int = 1
    ensemble: int = 100
    tol: dict = field(default_factory=dict)
    out: str | None = None
    format: str = "json"

    def validate(self) -> None:
        if self.suite not in suites.SUITES:
            raise ConfigError(f"unknown suite {self.suite!r}; choose from {', '.join(suites.SUITES)}")
        if self.d < 1:
            raise ConfigError("d must be >= 1")
        if self.K < 2:
            raise ConfigError("K must be >= 2")
        if self.J < 0:
            raise ConfigError("J must be >= 0")
        if self.cone_refine < 1:
            raise ConfigError("cone refinement must be >= 1")
        if self.ensemble < 1:
            raise ConfigError("ensembleSize must be >= 1")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")
        for k, v in self.tol.items():
            if not v >= 0:
                raise ConfigError(f"tolerance {k} must be >= 0")

    def params(self) -> suites.SuiteParams:
        return suites.SuiteParams(self.d, self.J, self.K, self.seed, self.cone_refine, self.ensemble, dict(self.tol))

    def as_dict(self) -> dict:
        return asdict(self)


def _set(cfg: ExperimentConfig, key: str, value: str) -> None:
    key = _ALIASES.get(key, key)
    try:
        if key.startswith("tol."):
            cfg.tol[key[4:]] = float(value)
        elif key in _INT_KEYS:
            setattr(cfg, key, int(value))
        elif key in ("suite", "out", "format"):
            setattr(cfg, key, value)
        else:
            raise ConfigError(f"unknown config key {key!r}")
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"bad value {value!r} for {key}") from None


def read_config_file(path: str, cfg: ExperimentConfig | None = None) -> ExperimentConfig:
    """Flat key=value lines; '#' starts a comment."""
    cfg = ExperimentConfig() if cfg is None else cfg
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as e:
        raise ConfigError(f"cannot read config file: {e}") from None
    for n, ln in enumerate(lines, 1):
        ln = ln.split("#", 1)[0].strip()
        if not ln:
            continue
        if "=" not in ln:
            raise ConfigError(f"{path}:{n}: expected key=value")
        k, v = (s.strip() for s in ln.split("=", 1))
        _set(cfg, k, v)
    return cfg


def _split_tol_flags(argv: list[str]) -> tuple[list[str], dict]:
    """Pull --tol.<name> VALUE (or --tol.<name>=VALUE) out of argv."""
    rest, tol = [], {}
    i = 0
    while i < len(argv):
        a = argv[i]
        if a.startswith("--tol."):
            if "=" in a:
                k, v = a[6:].split("=", 1)
            else:
                if i + 1 >= len(argv):
                    raise ConfigError(f"{a} needs a value")
                k, v = a[6:], argv[i + 1]
                i += 1
            if not k:
                raise ConfigError("empty tolerance name")
            tol[k] = v
        else:
            rest.append(a)
        i += 1
    return rest, tol


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nchardy", description="Run verification suites and write a report.")
    p.add_argument("command", nargs="?", default="verify", choices=["verify"])
    p.add_argument("--config", help="key=value config file; flags override it")
    p.add_argument("--suite", choices=suites.SUITES)
    p.add_argument("--d", type=int)
    p.add_argument("--J", type=int)
    p.add_argument("--K", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--ensemble", type=int, help="ensemble size")
    p.add_argument("--cone-refine", dest="cone_refine", type=int)
    p.add_argument("--out", help="report path (default: stdout)")
    p.add_argument("--format", choices=FORMATS)
    p.epilog = "Tolerances: --tol.<name> VALUE, names: " + ", ".join(suites.DEFAULT_TOLS)
    return p


def parse_config(argv: list[str]) -> ExperimentConfig:
    argv, tol = _split_tol_flags(list(argv))
    ns = build_parser().parse_args(argv)
    cfg = read_config_file(ns.config) if ns.config else ExperimentConfig()
    for key in ("suite", "d", "J", "K", "seed", "ensemble", "cone_refine", "out", "format"):
        v = getattr(ns, key)
        if v is not None:
            setattr(cfg, key, v)
    for k, v in tol.items():
        _set(cfg, "tol." + k, v)
    cfg.validate()
    return cfg


def _check_writable(path: str | None) -> None:
    if path is None:
        return
    try:
        with open(path, "a", encoding="utf-8"):
            pass
    except OSError as e:
        raise ConfigError(f"cannot write report: {e}") from None


def run_config(cfg: ExperimentConfig) -> tuple[list[NormReport], bool, list[suites.SuiteResult]]:
    results = suites.run(cfg.suite, cfg.params())
    reports = []
    for res in results:
        for r in res.reports:
            r.meta.setdefault("suite", res.suite)
            reports.append(r)
        reports.append(NormReport.exact(f"{res.suite}_pass", int(res.passed), meta={"suite": res.suite}))
    return reports, all(r.passed for r in results), results


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
        _check_writable(cfg.out)
    except ConfigError as e:
        print(f"nchardy: error: {e}", file=sys.stderr)
        return 2
    except SystemExit as e:
        return int(e.code or 0) and 2
    try:
        reports, passed, results = run_config(cfg)
    except ValueError as e:
        reports = [NormReport.exact("error", float("nan"), meta={"error": str(e)})]
        passed, results = False, []
        print(f"nchardy: {e}", file=sys.stderr)
    text = emit_report(cfg.suite, cfg.as_dict(), reports, passed, cfg.format, cfg.out)
    if cfg.out is None:
        sys.stdout.write(text)
    for res in results:
        print(f"{res.suite}: {'pass' if res.passed else 'FAIL'}", file=sys.stderr)
    return 0 if passed else 1


if __name__ == "__main__":
    sys.exit(main())
