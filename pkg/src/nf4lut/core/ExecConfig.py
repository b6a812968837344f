from __future__ import annotations
import numpy as np

import logging
logger = logging.getLogger(__name__)

OUTPUT_PRECISIONS = {
    "float32": np.float32,
    "float16": np.float16,
}


class ExecConfig:
    """
    Tile/lane geometry and worker settings of the tiled dequantization executor.

      - tile_elems: elements per tile (512 by default, the 64 lanes x 8 elements kernel geometry).
      - lanes: logical lanes per tile.
      - elems_per_lane: elements processed per lane.
      - workers: number of parallel workers (threads) the tiles are distributed over.
      - output_precision: "float32" (default) or "float16". In float16 mode each product is computed
                          in float32 and then rounded to nearest-even float16.
      - tiles_per_task: how many consecutive tiles one worker task walks through. Every tile in a
                        task still stages its own copy of the LUT. It has no effect on the output.

    tile_elems must equal lanes * elems_per_lane and be even, so every tile starts on a byte
    boundary of the packed nibbles.
    """

    def __init__(
        self,
        tile_elems: int = 512,
        lanes: int = 64,
        elems_per_lane: int = 8,
        workers: int = 1,
        output_precision: str = "float32",
        tiles_per_task: int = 64,
    ):
        self.tile_elems = tile_elems
        self.lanes = lanes
        self.elems_per_lane = elems_per_lane
        self.workers = workers
        self.output_precision = output_precision
        self.tiles_per_task = tiles_per_task
        self.validate()

    def __repr__(self) -> str:
        return (
            f"ExecConfig(tile_elems={self.tile_elems}, lanes={self.lanes}, elems_per_lane={self.elems_per_lane}, "
            f"workers={self.workers}, output_precision={self.output_precision!r}, tiles_per_task={self.tiles_per_task})"
        )

    def validate(self):
        for name in ("tile_elems", "lanes", "elems_per_lane", "workers", "tiles_per_task"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 1:
                raise ValueError(f"ExecConfig.{name} must be a positive integer, got {value!r}")
        if self.tile_elems != self.lanes * self.elems_per_lane:
            raise ValueError(
                f"ExecConfig.tile_elems ({self.tile_elems}) must equal lanes x elems_per_lane "
                f"({self.lanes} x {self.elems_per_lane})"
            )
        if self.tile_elems % 2 != 0:
            raise ValueError(f"ExecConfig.tile_elems ({self.tile_elems}) must be even")
        if self.output_precision not in OUTPUT_PRECISIONS:
            raise ValueError(
                f"ExecConfig.output_precision must be one of {list(OUTPUT_PRECISIONS)}, got {self.output_precision!r}"
            )

    @property
    def dtype(self):
        return OUTPUT_PRECISIONS[self.output_precision]

    @classmethod
    def from_tile(cls, tile_elems: int, elems_per_lane: int = 8, **kwargs) -> ExecConfig:
        """
        Builds a config for a given tile size, deriving the lane count as tile_elems / elems_per_lane.
        """
        if tile_elems % elems_per_lane != 0:
            raise ValueError(f"tile size {tile_elems} is not a multiple of elems_per_lane ({elems_per_lane})")
        return cls(
            tile_elems=tile_elems,
            lanes=tile_elems // elems_per_lane,
            elems_per_lane=elems_per_lane,
            **kwargs,
        )

    def replace(self, **kwargs) -> ExecConfig:
        """Returns a copy with the given fields changed. Changing tile_elems re-derives lanes."""
        settings = self.to_json()
        if "tile_elems" in kwargs and "lanes" not in kwargs:
            elems_per_lane = kwargs.get("elems_per_lane", settings["elems_per_lane"])
            if kwargs["tile_elems"] % elems_per_lane != 0:
                raise ValueError(
                    f"tile size {kwargs['tile_elems']} is not a multiple of elems_per_lane ({elems_per_lane})"
                )
            settings["lanes"] = kwargs["tile_elems"] // elems_per_lane
        settings.update(kwargs)
        return ExecConfig(**settings)

    def to_json(self) -> dict:
        return {
            "tile_elems": self.tile_elems,
            "lanes": self.lanes,
            "elems_per_lane": self.elems_per_lane,
            "workers": self.workers,
            "output_precision": self.output_precision,
            "tiles_per_task": self.tiles_per_task,
        }

    @classmethod
    def from_json(cls, json_data: dict) -> ExecConfig:
        """
        Constructs an ExecConfig from its JSON representation. Missing keys keep their defaults,
        unknown keys are ignored with a warning.
        """
        if not isinstance(json_data, dict):
            raise ValueError(f"ExecConfig JSON must be an object, got {type(json_data).__name__}")
        known = cls().to_json()
        for key in json_data:
            if key not in known:
                logger.warning(f"Attribute {key} doesn't exist in ExecConfig, ignoring it.")
        settings = {key: json_data[key] for key in known if key in json_data}
        if "tile_elems" in settings and "lanes" not in settings:
            settings["lanes"] = settings["tile_elems"] // settings.get("elems_per_lane", known["elems_per_lane"])
        return cls(**settings)
