from .ast import (
    AndVal,
    Arrow,
    Case,
    Close,
    Cut,
    Down,
    FApp,
    Fix,
    FVar,
    FwdNeg,
    FwdPos,
    ConfigDecl,
    ImpVal,
    Interface,
    Lam,
    Lolli,
    MsgF,
    One,
    Plus,
    ProcF,
    ProcType,
    Module,
    ProcDecl,
    Quote,
    Rec,
    RecvChan,
    RecvShift,
    RecvUnfold,
    RecvVal,
    SendChan,
    SendLabel,
    SendShift,
    SendUnfold,
    SendVal,
    Tensor,
    TermDecl,
    TVar,
    TypeDecl,
    Unquote,
    Up,
    Wait,
    With,
    fc,
    message_parts,
    polarity,
    proc_to_str,
    term_to_str,
    type_eq,
    type_to_str,
    unfold_rec,
)
from .check import (
    CyclicSharing,
    IllFormed,
    IllTyped,
    InterfaceMismatch,
    LinearityError,
    NotAMessage,
    SillError,
    SillTypeError,
    UnboundTypeVariable,
    carrier_continuation,
    check_config,
    check_proc,
    check_module,
    check_term,
    check_type,
    oc_ic,
)
from .parser import ParseError, module_to_str, parse, parse_proc, parse_term, parse_type

__all__ = [name for name in dir() if not name.startswith("_")]
