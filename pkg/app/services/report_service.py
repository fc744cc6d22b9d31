"""Report rendering using Jinja2."""

from __future__ import annotations

from typing import Any, Mapping, Optional

from jinja2 import Environment, StrictUndefined, TemplateSyntaxError, UndefinedError

from app.cli.default_templates import ACCEPTANCE_REPORT, EXPERIMENT_REPORT
from app.exceptions import ReportError
from app.models.reports import AcceptanceReport, MetricReport


class ReportService:
    """Renders experiment and acceptance reports as plain text."""

    def __init__(self):
        self.env = Environment(
            trim_blocks=True,
            lstrip_blocks=True,
            undefined=StrictUndefined,
            keep_trailing_newline=True,
        )
        self.env.filters["pct"] = self._pct_filter
        self.env.filters["fmt"] = self._fmt_filter
        self.env.filters["pm"] = self._pm_filter

    def render(self, template_string: str, **context: Any) -> str:
        """
        Render a template with arbitrary context.

        Raises:
            ReportError: If the template has syntax errors or rendering fails
        """
        try:
            return self.env.from_string(template_string).render(**context)
        except TemplateSyntaxError as e:
            raise ReportError(
                message=f"Template syntax error: {e.message}",
                line_number=e.lineno,
                details={"template_snippet": template_string[:200]},
            )
        except UndefinedError as e:
            raise ReportError(
                message=f"Undefined variable in template: {str(e)}",
                details={"template_snippet": template_string[:200]},
            )
        except Exception as e:
            raise ReportError(
                message=f"Report rendering failed: {str(e)}",
                details={"error_type": type(e).__name__},
            )

    def render_experiment(self, report: MetricReport, template: Optional[str] = None) -> str:
        return self.render(template or EXPERIMENT_REPORT, report=report.body())

    def render_acceptance(self, acceptance: AcceptanceReport, template: Optional[str] = None) -> str:
        return self.render(
            template or ACCEPTANCE_REPORT,
            acceptance=acceptance.body(),
            passed=acceptance.passed,
        )

    @staticmethod
    def _pct_filter(value: Optional[float]) -> str:
        """
        Fraction as a percentage

        Usage in template: {{ row.accuracy | pct }}
        """
        if value is None:
            return "n/a"
        return f"{100.0 * value:.2f}%"

    @staticmethod
    def _fmt_filter(value: Optional[float], digits: int = 4) -> str:
        if value is None:
            return "n/a"
        return f"{value:.{digits}f}"

    @staticmethod
    def _pm_filter(agg: Optional[Mapping[str, Any]]) -> str:
        """
        "mean ± std" in percent

        Usage in template: {{ report.aggregate.accuracy | pm }}
        """
        if not agg or agg.get("mean") is None:
            return "n/a"
        return f"{100.0 * agg['mean']:.2f} ± {100.0 * (agg.get('std') or 0.0):.2f}"


def render_report(report: MetricReport) -> str:
    """Text form of an experiment report."""
    return ReportService().render_experiment(report)
