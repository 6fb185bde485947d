import enum


# --- Enums ---

class Sheet(str, enum.Enum):
    PLUS = "+"  # G+(V): canonical orientation of V + V*
    MINUS = "-"  # G-(V): opposite orientation


class CheckStatus(str, enum.Enum):
    PASS = "pass"
    FAIL = "fail"


class SuiteName(str, enum.Enum):
    FIBER_ALGEBRA = "fiber-algebra"
    COURANT = "courant"
    CONNECTION = "connection"
    THEOREM = "theorem"
    BIHERMITIAN = "bihermitian"


class NijenhuisBlock(str, enum.Enum):
    HH = "HxH"  # horizontal lifts of T + T* against each other
    HV = "HxV"  # horizontal against vertical (V + V*)
    VV = "VxV"


class TwistorStructure(str, enum.Enum):
    CAL_I = "I"
    CAL_J = "J"
