import os
from typing import List, Literal, Optional

import dotenv
from pydantic import BaseModel, Field, field_validator, model_validator

from .KloostermanSum import DEFAULT_BUDGET
from .PadicArith import is_prime

MAX_THREADS = 8


def _truthy(value: Optional[str]) -> bool:
    return (value or "").strip().lower() in ("1", "true", "yes", "on")


class Settings(BaseModel):
    """Defaults taken from the environment (and a .env file, when present)."""
    threads: int = Field(..., ge=1, description="Worker threads for enumeration.")
    budget: int = Field(..., ge=1, description="Largest enumeration a single run may attempt.")
    debug: bool = Field(False, description="Print debug lines and tracebacks.")

    @classmethod
    def from_environment(cls, load_env_file: bool = True) -> "Settings":
        if load_env_file:
            dotenv.load_dotenv(dotenv.find_dotenv(usecwd=True))
        threads = os.environ.get("KLOOSTERMAN_THREADS")
        budget = os.environ.get("KLOOSTERMAN_BUDGET")
        return cls(
            threads=int(threads) if threads else min(os.cpu_count() or 1, MAX_THREADS),
            budget=int(budget) if budget else DEFAULT_BUDGET,
            debug=_truthy(os.environ.get("KLOOSTERMAN_DEBUG")),
        )


class RunConfig(BaseModel):
    p: int = Field(..., description="The prime.")
    blocks: List[int] = Field(..., description="Block sizes k_1, ..., k_n of the admissible Weyl element.")
    r: Optional[List[int]] = Field(None, description="Exponent vector; zeros when omitted.")
    psi: Optional[List[int]] = Field(None, description="Left character psi_1..psi_N; zeros when omitted.")
    psi_prime: Optional[List[int]] = Field(None, description="Right character psi'_1..psi'_N; zeros when omitted.")
    level: int = Field(0, ge=0, description="Gamma_0(p^level) congruence level; 0 is the full group.")
    output_format: Literal["json", "csv", "text"] = Field("text", description="Rendering of the result record.")
    budget: int = Field(DEFAULT_BUDGET, ge=1, description="Largest enumeration allowed.")
    threads: int = Field(1, ge=1, description="Worker threads.")
    seed: int = Field(0, description="Seed for sampled verification cases.")

    @field_validator("p")
    @classmethod
    def _prime(cls, p: int) -> int:
        if not is_prime(p):
            raise ValueError(f"{p} is not prime.")
        return p

    @field_validator("blocks")
    @classmethod
    def _positive_blocks(cls, blocks: List[int]) -> List[int]:
        if not blocks or any(k < 1 for k in blocks):
            raise ValueError(f"Block sizes must be positive, got {blocks}.")
        return blocks

    @model_validator(mode="after")
    def _lengths(self) -> "RunConfig":
        N = sum(self.blocks) - 1
        for name in ("r", "psi", "psi_prime"):
            value = getattr(self, name)
            if value is None:
                setattr(self, name, [0] * N)
            elif len(value) != N:
                raise ValueError(f"{name} must have length N = {N}, got {value}.")
        if any(x < 0 for x in self.r):
            raise ValueError(f"Exponent vector {self.r} has a negative entry.")
        return self

    @property
    def N(self) -> int:
        return sum(self.blocks) - 1
