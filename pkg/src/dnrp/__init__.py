"""Diffusive name-based routing (DNRP), a link-state baseline and a discrete-event simulator."""
from .engine import DnrpRouter, ProtocolError
from .ils import IlsRouter
from .model import INFINITY, Topology
from .sim import Simulator

__all__ = ["DnrpRouter", "IlsRouter", "INFINITY", "ProtocolError", "Simulator", "Topology"]
