"""Distillability witnesses for Werner states."""
