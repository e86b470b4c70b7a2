"""Tomography library shared by the CLI and the services."""
