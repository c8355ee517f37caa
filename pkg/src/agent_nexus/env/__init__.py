"""Simulated mobile device: apps, states, transitions and reward."""

from .apps import AppDefinitionError, AppMachine, SchemaMismatch, StoreSchema, builtin_apps, load_app
from .reward import Goal, ProgressTracker, checkpoint_holds, reward, satisfied_leaves, values_equal
from .state import (
    HOME, SYSTEM, Action, Back, Device, Effect, Element, EnvState, Home, Observation, Stop, Swipe,
    Tap, Type, UnknownSnapshot, builtin_device, observe, parse_action, step,
)

__all__ = [
    "AppDefinitionError", "AppMachine", "SchemaMismatch", "StoreSchema", "builtin_apps", "load_app",
    "Goal", "ProgressTracker", "checkpoint_holds", "reward", "satisfied_leaves", "values_equal",
    "HOME", "SYSTEM", "Action", "Back", "Device", "Effect", "Element", "EnvState", "Home",
    "Observation", "Stop", "Swipe", "Tap", "Type", "UnknownSnapshot", "builtin_device", "observe",
    "parse_action", "step",
]
