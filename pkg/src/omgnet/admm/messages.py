"""Messages exchanged between node and edge tasks."""
from dataclasses import dataclass
from enum import Enum

__all__ = ["MessageKind", "Message", "Transport", "InProcessTransport"]


class MessageKind(Enum):
    NODE_PRIMAL = "node_primal"  # (theta_i, fhat_{i,e})
    EDGE_PRIMAL = "edge_primal"  # (f_e, theta_hat_{e,i})
    NODE_DUAL = "node_dual"      # (eta_{i,e},)
    EDGE_DUAL = "edge_dual"      # (xi_{e,i},)


@dataclass(frozen=True)
class Message:
    """One immutable message.

    ``src`` and ``dst`` are ``("node", i)`` or ``("edge", e)`` pairs; the
    payload layout depends on ``kind`` (see :class:`MessageKind`).
    """

    kind: MessageKind
    src: tuple
    dst: tuple
    iteration: int
    payload: tuple


class Transport:
    """Carries messages between cluster controllers."""

    def send(self, cluster, message):
        raise NotImplementedError

    def drain(self, cluster):
        raise NotImplementedError


class InProcessTransport(Transport):
    """Per-cluster mailboxes held in memory."""

    def __init__(self, n_clusters):
        self._boxes = [[] for _ in range(n_clusters)]
        self.sent = 0

    def send(self, cluster, message):
        self._boxes[cluster].append(message)
        self.sent += 1

    def drain(self, cluster):
        box, self._boxes[cluster] = self._boxes[cluster], []
        return box
