"""
Bundled configuration templates and synthetic scenario presets.
"""

import os
from typing import List, Optional

# Directory containing the template files
TEMPLATE_DIR = os.path.dirname(os.path.abspath(__file__))
SCENARIO_DIR = os.path.join(TEMPLATE_DIR, "scenarios")


def get_template_path(filename):
    """Get the absolute path to a template file."""
    return os.path.join(TEMPLATE_DIR, filename)


def get_template_content(filename):
    """Get the content of a template file."""
    with open(get_template_path(filename), "r") as f:
        return f.read()


def list_scenarios() -> List[str]:
    """Names of the bundled scenario presets."""
    return sorted(
        os.path.splitext(name)[0]
        for name in os.listdir(SCENARIO_DIR)
        if name.endswith(".yaml")
    )


def get_scenario_path(name: str) -> Optional[str]:
    """Path of the preset called ``name``, or None if there is no such preset."""
    path = os.path.join(SCENARIO_DIR, f"{name}.yaml")
    return path if os.path.isfile(path) else None
