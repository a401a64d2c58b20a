"""
Controller for mldlab
Routes a parsed command (mld / enumerate / solve / verify) to the module that handles it,
renders the result as JSON or a pandas table and maps errors to process exit codes.
"""

import json
import logging
import os
from datetime import datetime
from typing import Any, Dict, List, Optional, Sequence, Tuple

import pandas as pd

from arith_module import (
    InvalidInputError,
    InvariantBreachError,
    MldLabError,
    PreconditionError,
    parse_rational,
)
from boxsolver_module import BoxSet, BoxSolver, FloorSystem
from enumeration_module import Enumerator
from singularity_module import CyclicQuotient, mld
from theorem_module import TheoremReport, TheoremVerifier

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_INVARIANT = 3

FORMATS = ("json", "text")


class MldLabController:
    """
    Central controller: one handler per subcommand, a uniform response dict for all of them.
    """

    def __init__(self, jobs: int = 1, progress: bool = True, data_dir: Optional[str] = None):
        """
        Initialize the controller.

        Args:
            jobs: worker processes handed to enumeration and verification
            progress: show tqdm progress bars on stderr
            data_dir: expected-artifact directory for verify (None: MLDLAB_DATA_DIR or data/expected)
        """
        self.logger = logging.getLogger(__name__)
        if jobs < 1:
            raise InvalidInputError(f"jobs must be at least 1, got {jobs}")
        self.jobs = jobs
        self.progress = progress
        self.data_dir = data_dir
        self.solver = BoxSolver()
        self.enumerator = Enumerator(jobs=jobs, progress=progress)

        self.handlers: Dict[str, Dict[str, Any]] = {
            "mld": {"run": self.cmd_mld, "default_format": "text",
                    "description": "Minimal log discrepancy of 1/r(a_1,...,a_d)"},
            "enumerate": {"run": self.cmd_enumerate, "default_format": "json",
                          "description": "Members of A(level[, eps]) for r in a range"},
            "solve": {"run": self.cmd_solve, "default_format": "json",
                      "description": "Solve a floor-sum system given as JSON"},
            "verify": {"run": self.cmd_verify, "default_format": "json",
                       "description": "Re-run theorem verifications against stored expectations"},
        }

    def route_command(self, command: str, fmt: Optional[str] = None, **params) -> Dict[str, Any]:
        """
        Run one subcommand and wrap its result.

        Args:
            command: subcommand name
            fmt: "json" or "text" (None: the subcommand's default)
            **params: keyword arguments of the handler

        Returns:
            Dict with success, exit_code, command, output (rendered text) and timestamp;
            error is set when the command raised
        """
        handler = self.handlers.get(command)
        if handler is None:
            available = ", ".join(self.get_command_status()["commands"])
            return self._error_response(command, EXIT_USAGE, f"unknown command {command!r}; choose from {available}")
        fmt = fmt or handler["default_format"]
        if fmt not in FORMATS:
            return self._error_response(command, EXIT_USAGE, f"format must be one of {FORMATS}, got {fmt!r}")

        self.logger.info(f"Running {command}")
        try:
            output, exit_code = handler["run"](fmt=fmt, **params)
        except InvariantBreachError as e:
            self.logger.error(f"Internal invariant violated in {command}: {str(e)}")
            return self._error_response(command, EXIT_INVARIANT, f"internal invariant violated: {e}")
        except (InvalidInputError, PreconditionError) as e:
            self.logger.error(f"Invalid input for {command}: {str(e)}")
            return self._error_response(command, EXIT_USAGE, str(e))
        except MldLabError as e:
            self.logger.error(f"Error running {command}: {str(e)}")
            return self._error_response(command, EXIT_FAILED, str(e))

        return {
            "success": exit_code == EXIT_OK,
            "exit_code": exit_code,
            "command": command,
            "output": output,
            "timestamp": datetime.now().isoformat(),
        }

    def _error_response(self, command: str, exit_code: int, message: str) -> Dict[str, Any]:
        return {
            "success": False,
            "exit_code": exit_code,
            "command": command,
            "output": "",
            "error": message,
            "timestamp": datetime.now().isoformat(),
        }

    # ------------------------------------------------------------ handlers

    def cmd_mld(self, r: int, weights: str, fmt: str = "text") -> Tuple[str, int]:
        cq = CyclicQuotient.parse(r, weights)
        result = mld(cq)
        self.logger.debug(f"mld({cq}) = {result}")
        if fmt == "text":
            return str(result), EXIT_OK
        return _dump({"singularity": cq.to_dict(), **result.to_dict()}), EXIT_OK

    def cmd_enumerate(self, level: int, r_min: int, r_max: int, eps: Optional[str] = None,
                      bar: bool = False, fmt: str = "json") -> Tuple[str, int]:
        epsilon = parse_rational(eps) if eps is not None else None
        members = self.enumerator.members(level, epsilon, r_min, r_max, bar)
        self.logger.info(f"Found {len(members)} members at level {level}")
        if fmt == "text":
            return render_members(members), EXIT_OK
        return _dump(members), EXIT_OK

    def cmd_solve(self, spec_path: str, fmt: str = "json") -> Tuple[str, int]:
        system = load_system(spec_path)
        boxes = self.solver.solve_normalized(system)
        self.logger.info(f"{spec_path}: {len(boxes)} boxes after normalization")
        if fmt == "text":
            return render_boxes(boxes), EXIT_OK
        return _dump(boxes.to_dict()), EXIT_OK

    def cmd_verify(self, ids: Sequence[str], r_max_3d: int = 200, r_max_5d: int = 60,
                   fmt: str = "json") -> Tuple[str, int]:
        verifier = TheoremVerifier(jobs=self.jobs, progress=self.progress, data_dir=self.data_dir,
                                   r_max_3d=r_max_3d, r_max_5d=r_max_5d)
        reports = verifier.run(ids)
        failed = [report.id for report in reports if not report.verified]
        if failed:
            self.logger.warning(f"Not verified: {', '.join(failed)}")
        exit_code = EXIT_FAILED if failed else EXIT_OK
        if fmt == "text":
            return render_reports(reports), exit_code
        return _dump([report.to_dict() for report in reports]), exit_code

    def get_command_status(self) -> Dict[str, Any]:
        """Available subcommands with their descriptions and worker settings."""
        return {
            "commands": {name: handler["description"] for name, handler in self.handlers.items()},
            "jobs": self.jobs,
            "progress": self.progress,
        }


def _dump(payload: Any) -> str:
    return json.dumps(payload, indent=2)


def load_system(spec_path: str) -> FloorSystem:
    """Read and validate a FloorSystem JSON file; any failure is an InvalidInputError."""
    if not os.path.exists(spec_path):
        raise InvalidInputError(f"system file not found: {spec_path}")
    try:
        with open(spec_path, "r") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise InvalidInputError(f"{spec_path} is not valid JSON: {e}") from e
    except OSError as e:
        raise InvalidInputError(f"cannot read {spec_path}: {e}") from e
    return FloorSystem.from_dict(data)


def render_members(members: List[Dict[str, Any]]) -> str:
    if not members:
        return "no members"
    rows = []
    for item in members:
        singularity, membership = item["singularity"], item["membership"]
        rows.append({
            "singularity": str(CyclicQuotient.from_dict(singularity)),
            "mld": membership["mld"],
            "bar": membership["bar"],
            "roles": len(membership["roles"]),
            "disjuncts": ", ".join(sorted(set(membership["disjuncts"]))),
        })
    return pd.DataFrame(rows).to_string(index=False)


def render_boxes(boxes: BoxSet) -> str:
    if boxes.is_empty():
        return "no solution"
    rows = [{f"x{k + 1}": str(iv) for k, iv in enumerate(box.intervals)} for box in boxes]
    return pd.DataFrame(rows).to_string(index=False)


def render_reports(reports: List[TheoremReport]) -> str:
    frame = pd.DataFrame([
        {"id": report.id, "status": report.status, "discrepancies": len(report.discrepancies),
         "notes": len(report.notes), "runtime_ms": report.runtime_ms}
        for report in reports
    ])
    lines = [frame.to_string(index=False)]
    for report in reports:
        for message in report.discrepancies:
            lines.append(f"[{report.id}] {message}")
        for message in report.notes:
            lines.append(f"[{report.id}] note: {message}")
    return "\n".join(lines)


if __name__ == "__main__":
    controller = MldLabController(progress=False)
    for r, weights in [(13, "3,4,5"), (19, "3,4,5,7,18"), (1, "1,1,1")]:
        response = controller.route_command("mld", r=r, weights=weights)
        print(f"1/{r}({weights}): {response['output']}")
