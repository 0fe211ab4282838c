"""Scenario runner, result tables, plots and the verification suite."""
