"""Array geometry: a 5x8 ALU grid flanked by two 8-row RAM columns."""

from dataclasses import dataclass

from hpdp.errors import ParameterError

MAX_ALU_ELEMENTS = 1024
MAX_RAM_WORDS = 1 << 20


@dataclass(frozen=True)
class ArrayDims:
    alu_rows: int = 5
    alu_cols: int = 8
    ram_sides: int = 2
    ram_rows: int = 8
    ram_capacity: int = 4096

    def __post_init__(self):
        for field_name in ("alu_rows", "alu_cols", "ram_sides", "ram_rows", "ram_capacity"):
            if getattr(self, field_name) < 1:
                raise ParameterError(f"{field_name} must be >= 1")
        if self.alu_rows * self.alu_cols > MAX_ALU_ELEMENTS:
            raise ParameterError(f"{self.alu_rows}x{self.alu_cols} exceeds {MAX_ALU_ELEMENTS} ALU elements")
        if self.ram_capacity > MAX_RAM_WORDS:
            raise ParameterError(f"RAM capacity {self.ram_capacity} exceeds {MAX_RAM_WORDS} words")

    @property
    def alu_count(self) -> int:
        return self.alu_rows * self.alu_cols

    @property
    def ram_count(self) -> int:
        return self.ram_sides * self.ram_rows
