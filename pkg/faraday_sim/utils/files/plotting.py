from pathlib import Path

import jinja2
import structlog

from faraday_sim.constants import TEMPLATE_DIR
from faraday_sim.exceptions.files import TraceFileError

log = structlog.get_logger(__name__)

ENVIRONMENT = jinja2.Environment(
    loader=jinja2.FileSystemLoader(str(TEMPLATE_DIR)),
    undefined=jinja2.StrictUndefined,
    keep_trailing_newline=True,
)


def render_plot_script(template_name: str, csv_path: Path, **context) -> Path:
    """Render a gnuplot script for `csv_path` next to it, as `<stem>.gp`."""
    csv_path = Path(csv_path)
    script_path = csv_path.with_suffix(".gp")
    template = ENVIRONMENT.get_template(template_name)
    script = template.render(
        csv_file=csv_path.name, output_file=csv_path.with_suffix(".png").name, **context
    )
    try:
        script_path.write_text(script)
    except OSError as ex:
        raise TraceFileError(f"Could not write {script_path}: {ex}") from ex
    log.debug("Wrote plot script", path=str(script_path))
    return script_path
