# bidprice/models.py
"""
Pydantic models for instance files, simulation configs and run records.
"""
from datetime import datetime
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .config import SHARED


class Product(BaseModel):
    """A fare class sold on a path."""
    model_config = ConfigDict(frozen=True)

    fare: float = Field(..., gt=0, description="Revenue per unit of capacity")
    mean_demand: float = Field(0.0, ge=0, description="Expected requests over the horizon")
    probability: float = Field(0.0, ge=0, le=1, description="Choice probability given a path request")


class Leg(BaseModel):
    """A capacity resource of the network."""
    model_config = ConfigDict(frozen=True)

    id: str = Field(..., min_length=1, description="Leg identifier")
    capacity: int = Field(..., ge=0, description="Units of capacity")
    owner: str = Field(..., min_length=1, description="Owning party id or SHARED")

    @property
    def shared(self) -> bool:
        return self.owner == SHARED


class Path(BaseModel):
    """An origin-destination path owned by one party."""
    model_config = ConfigDict(frozen=True)

    id: str = Field(..., min_length=1, description="Path identifier")
    party: str = Field(..., min_length=1, description="Owning party id")
    legs: List[str] = Field(..., min_length=1, description="Ordered leg ids")
    products: List[Product] = Field(default_factory=list, description="Fare classes")

    @field_validator("legs")
    @classmethod
    def validate_legs(cls, v: List[str]) -> List[str]:
        """Legs along a path must be duplicate-free."""
        if len(set(v)) != len(v):
            raise ValueError("path legs must be duplicate-free")
        return v


class InstanceConfig(BaseModel):
    """Generation parameters stored alongside an instance."""
    model_config = ConfigDict(frozen=True)

    seed: Optional[int] = None
    horizon: int = Field(1000, gt=0)
    load_factor: float = Field(1.2, ge=0)
    max_breakpoints: int = Field(20, ge=1)
    hub_count: Optional[int] = None


class AllianceInstance(BaseModel):
    """The full alliance network: parties, legs and paths."""
    model_config = ConfigDict(frozen=True)

    parties: List[str] = Field(..., min_length=1)
    legs: List[Leg]
    paths: List[Path]
    config: InstanceConfig = Field(default_factory=InstanceConfig)

    @model_validator(mode="after")
    def validate_references(self) -> "AllianceInstance":
        """Check identifier uniqueness and that paths reference known legs and parties."""
        if len(set(self.parties)) != len(self.parties):
            raise ValueError("party ids must be unique")
        if SHARED in self.parties:
            raise ValueError(f"'{SHARED}' is reserved and cannot be a party id")
        leg_ids = [leg.id for leg in self.legs]
        if len(set(leg_ids)) != len(leg_ids):
            raise ValueError("leg ids must be unique")
        path_ids = [path.id for path in self.paths]
        if len(set(path_ids)) != len(path_ids):
            raise ValueError("path ids must be unique")

        known_legs = set(leg_ids)
        known_parties = set(self.parties)
        for leg in self.legs:
            if leg.owner != SHARED and leg.owner not in known_parties:
                raise ValueError(f"leg '{leg.id}' has unknown owner '{leg.owner}'")
        for path in self.paths:
            if path.party not in known_parties:
                raise ValueError(f"path '{path.id}' has unknown party '{path.party}'")
            missing = [leg for leg in path.legs if leg not in known_legs]
            if missing:
                raise ValueError(f"path '{path.id}' references unknown legs {missing}")
        return self

    def leg_map(self) -> Dict[str, Leg]:
        return {leg.id: leg for leg in self.legs}

    def paths_of(self, party: str) -> List[Path]:
        return [path for path in self.paths if path.party == party]

    def leg_users(self) -> Dict[str, List[str]]:
        """Parties whose paths use each leg, in party order."""
        users: Dict[str, List[str]] = {leg.id: [] for leg in self.legs}
        for party in self.parties:
            for path in self.paths_of(party):
                for leg in path.legs:
                    if party not in users[leg]:
                        users[leg].append(party)
        return users

    def with_state(
        self,
        capacities: Optional[Dict[str, int]] = None,
        demands: Optional[Dict[str, List[float]]] = None,
    ) -> "AllianceInstance":
        """Return a copy with replaced leg capacities and product mean demands."""
        legs = self.legs
        if capacities is not None:
            legs = [leg.model_copy(update={"capacity": int(capacities.get(leg.id, leg.capacity))})
                    for leg in self.legs]
        paths = self.paths
        if demands is not None:
            paths = []
            for path in self.paths:
                if path.id not in demands:
                    paths.append(path)
                    continue
                products = [
                    product.model_copy(update={"mean_demand": max(0.0, float(d))})
                    for product, d in zip(path.products, demands[path.id])
                ]
                paths.append(path.model_copy(update={"products": products}))
        return self.model_copy(update={"legs": legs, "paths": paths})


class SimConfig(BaseModel):
    """Booking simulation configuration."""
    model_config = ConfigDict(frozen=True)

    horizon: int = Field(1000, gt=0, description="Booking horizon T in periods")
    load_factor: float = Field(1.2, ge=0, description="Arrival intensity relative to capacity")
    segments: int = Field(5, ge=1, description="Reoptimization segments")
    replications: int = Field(100, ge=1)
    seed: int = 0
    strategies: List[str] = Field(default_factory=lambda: ["cp", "ccs", "ic"])
    key_kind: str = "dense"
    booking_limits: bool = True
    capacity_offset: float = Field(0.5, ge=0, lt=1, description="Seats taken off every open capacity when pricing")

    @field_validator("strategies")
    @classmethod
    def validate_strategies(cls, v: List[str]) -> List[str]:
        """Only CP, CCS and IC are known strategies."""
        normalized = [s.strip().lower() for s in v if s.strip()]
        unknown = [s for s in normalized if s not in ("cp", "ccs", "ic")]
        if unknown:
            raise ValueError(f"Unknown strategies {unknown}. Valid strategies are: cp, ccs, ic")
        if not normalized:
            raise ValueError("at least one strategy is required")
        return normalized

    @field_validator("key_kind")
    @classmethod
    def validate_key_kind(cls, v: str) -> str:
        if v not in ("dense", "sparse", "identity"):
            raise ValueError(f"Invalid key kind '{v}'. Valid kinds are: dense, sparse, identity")
        return v


class OutputFile(BaseModel):
    """One file written by a CLI command."""
    path: str
    sha256: str
    stable_sha256: str = Field(..., description="Hash with wall-clock timing columns removed")
    size: int


class RunManifest(BaseModel):
    """Record of one CLI invocation and everything it wrote."""
    command: str
    argv: List[str]
    seeds: Dict[str, int] = Field(default_factory=dict)
    instance_hash: Optional[str] = None
    code_version: str
    started: datetime = Field(default_factory=datetime.now)
    finished: Optional[datetime] = None
    outputs: List[OutputFile] = Field(default_factory=list)
    checks_passed: bool = True
