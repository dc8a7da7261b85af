"""Single source of the artifact version string embedded in reports."""

VERSION = "0.1.0"
