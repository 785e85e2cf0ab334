"""Plugin contract and registry for the filtering/positioning/collaborative
algorithm pipeline.

Plugins are registered Python objects behind a uniform interface; the
registry is built once at startup and read-only afterwards.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Protocol, runtime_checkable

from .geo import GeoPoint

_SLUG_RE = re.compile(r"^[a-z0-9][a-z0-9\-_]*$")


class PluginCategory(str, Enum):
    FILTERING = "filtering"
    POSITIONING = "positioning"
    COLLABORATIVE = "collaborative"


@dataclass(frozen=True)
class PluginMetadata:
    name: str
    slug: str
    display_name: str
    category: PluginCategory

    def __post_init__(self) -> None:
        if not _SLUG_RE.match(self.slug):
            raise ValueError(f"invalid plugin slug: {self.slug!r}")


@runtime_checkable
class Plugin(Protocol):
    def get_plugin_name(self) -> str: ...

    def get_plugin_slug(self) -> str: ...

    def get_plugin_display_name(self) -> str: ...

    def get_plugin_category(self) -> PluginCategory: ...


class BasePlugin:
    """Convenience base exposing metadata through the contract functions."""

    metadata: PluginMetadata

    def get_plugin_name(self) -> str:
        return self.metadata.name

    def get_plugin_slug(self) -> str:
        return self.metadata.slug

    def get_plugin_display_name(self) -> str:
        return self.metadata.display_name

    def get_plugin_category(self) -> PluginCategory:
        return self.metadata.category

    def validate_params(self, params: dict) -> None:
        """Reject unusable parameters at pipeline-assembly time."""


@dataclass(frozen=True)
class DeviceView:
    """Read-only snapshot of one collaboration participant at a tick.

    `kind` is "mobile" or "beacon"; beacons carry errors=0 and no
    previous location.
    """

    id: str
    kind: str
    location: GeoPoint
    errors: float
    prev_location: Optional[GeoPoint] = None


@dataclass(frozen=True)
class CollaborationUpdate:
    """Location/error update for one device, applied by the replay engine."""

    device_id: str
    new_location: Optional[GeoPoint] = None
    new_errors: Optional[float] = None
    source_kind: str = "mobile"  # "mobile" (peer) or "beacon"


class PluginError(ValueError):
    """Registry or pipeline-assembly error."""


class PluginRegistry:
    def __init__(self) -> None:
        self._plugins: dict[str, Plugin] = {}
        self._order: list[str] = []

    def register(self, plugin: Plugin) -> None:
        slug = plugin.get_plugin_slug()
        if slug in self._plugins:
            raise PluginError(f"slug collision: {slug!r}")
        self._plugins[slug] = plugin
        self._order.append(slug)

    def get(self, slug: str) -> Plugin:
        try:
            return self._plugins[slug]
        except KeyError:
            raise PluginError(f"unknown plugin: {slug!r}") from None

    def list(self, category: Optional[PluginCategory] = None) -> list[PluginMetadata]:
        out = []
        for slug in self._order:
            p = self._plugins[slug]
            meta = PluginMetadata(
                name=p.get_plugin_name(),
                slug=p.get_plugin_slug(),
                display_name=p.get_plugin_display_name(),
                category=p.get_plugin_category(),
            )
            if category is None or meta.category == category:
                out.append(meta)
        return out

    def __contains__(self, slug: str) -> bool:
        return slug in self._plugins


@dataclass(frozen=True)
class PipelineConfig:
    """Plugin slugs plus per-stage parameter maps. Positioning is mandatory."""

    positioning: str
    filtering: Optional[str] = None
    collaborative: Optional[str] = None
    filtering_params: dict = field(default_factory=dict)
    positioning_params: dict = field(default_factory=dict)
    collaborative_params: dict = field(default_factory=dict)

    def slugs(self) -> list[str]:
        out = []
        if self.filtering:
            out.append(self.filtering)
        out.append(self.positioning)
        if self.collaborative:
            out.append(self.collaborative)
        return out

    def validate(self, registry: PluginRegistry) -> None:
        """Check every referenced slug exists with the matching category and
        that its parameters validate."""
        stages = [
            (self.filtering, PluginCategory.FILTERING, self.filtering_params),
            (self.positioning, PluginCategory.POSITIONING, self.positioning_params),
            (self.collaborative, PluginCategory.COLLABORATIVE, self.collaborative_params),
        ]
        for slug, category, params in stages:
            if slug is None:
                continue
            plugin = registry.get(slug)
            if plugin.get_plugin_category() != category:
                raise PluginError(
                    f"plugin {slug!r} has category {plugin.get_plugin_category().value}, "
                    f"expected {category.value}"
                )
            if hasattr(plugin, "validate_params"):
                plugin.validate_params(params)


def default_registry() -> PluginRegistry:
    """Registry with the built-in lowpass / pdr / drift-correction plugins."""
    from .algorithms import (
        DriftCorrectionPlugin,
        LowPassFilterPlugin,
        PdrPositioningPlugin,
    )

    registry = PluginRegistry()
    registry.register(LowPassFilterPlugin())
    registry.register(PdrPositioningPlugin())
    registry.register(DriftCorrectionPlugin())
    return registry
