""" Authenticated sessions, keepalive and travel between adjacent beacons. """
import logging
import threading
import uuid
from dataclasses import dataclass
from dataclasses import replace
from enum import Enum

from typing import Dict
from typing import FrozenSet
from typing import Iterable
from typing import List
from typing import Optional
from typing import Set
from typing import Tuple

from loc_auth.errors import TravelRejected
from loc_auth.protocol import Authenticated
from loc_auth.tokens import Clock

logger = logging.getLogger(__name__)

DEFAULT_TTL_MS = 300000


class Origin(Enum):
    FULL_LOGIN = "full_login"
    TRAVELED = "traveled"


class TravelRejectReason(Enum):
    SESSION_EXPIRED = "SessionExpired"
    NON_ADJACENT = "NonAdjacent"
    USER_MISMATCH = "UserMismatch"


@dataclass(frozen=True)
class Session:
    username: str
    beacon_id: uuid.UUID
    established_at_us: int
    expires_at_us: int
    origin: Origin = Origin.FULL_LOGIN
    traveled_from: Optional[uuid.UUID] = None

    @property
    def established_at_ms(self) -> float:
        return self.established_at_us / 1000

    @property
    def expires_at_ms(self) -> float:
        return self.expires_at_us / 1000

    def active(self, clock: Clock) -> bool:
        return clock.now_us < self.expires_at_us


class AdjacencyGraph:
    """ Undirected beacon adjacency without self-loops. """

    def __init__(self, edges: Iterable[Tuple[uuid.UUID, uuid.UUID]] = ()) -> None:
        self._edges: Set[FrozenSet[uuid.UUID]] = set()
        for a, b in edges:
            self.add_edge(a, b)

    def add_edge(self, a: uuid.UUID, b: uuid.UUID) -> None:
        if a == b:
            raise ValueError(f"self-loop on beacon {a}")
        self._edges.add(frozenset((a, b)))

    def adjacent(self, a: uuid.UUID, b: uuid.UUID) -> bool:
        return frozenset((a, b)) in self._edges

    def neighbors(self, a: uuid.UUID) -> Set[uuid.UUID]:
        return {b for edge in self._edges if a in edge for b in edge if b != a}

    def __len__(self) -> int:
        return len(self._edges)


class SessionStore:
    """ At most one session per user.  Callers serialize through the lock. """

    def __init__(self, ttl_ms: int = DEFAULT_TTL_MS, sliding: bool = True) -> None:
        if ttl_ms <= 0:
            raise ValueError("ttl must be positive")
        self.ttl_ms = ttl_ms
        self.sliding = sliding
        self._sessions: Dict[str, Session] = {}
        self._lock = threading.Lock()

    def establish(self, result: Authenticated, clock: Clock,
                  ttl_ms: Optional[int] = None) -> Session:
        if not isinstance(result, Authenticated):
            raise TypeError("only an authenticated result opens a session")
        ttl_us = (ttl_ms or self.ttl_ms) * 1000
        now = clock.now_us
        session = Session(result.username, result.beacon_id, now, now + ttl_us)
        with self._lock:
            self._sessions[result.username] = session
        logger.info("session for %s established at %s", result.username,
                    result.beacon_id)
        return session

    def lookup(self, username: str, clock: Clock) -> Optional[Session]:
        with self._lock:
            session = self._sessions.get(username)
        if session is None or not session.active(clock):
            return None
        return session

    def revoke(self, username: str) -> Optional[Session]:
        with self._lock:
            return self._sessions.pop(username, None)

    def travel(self, session: Session, new_login: Authenticated,
               graph: AdjacencyGraph, clock: Clock) -> Session:
        if new_login.username != session.username:
            raise TravelRejected(TravelRejectReason.USER_MISMATCH)
        if not session.active(clock):
            raise TravelRejected(TravelRejectReason.SESSION_EXPIRED)

        now = clock.now_us
        if self.sliding:
            expires = now + self.ttl_ms * 1000
        else:
            expires = session.expires_at_us

        if new_login.beacon_id == session.beacon_id:
            moved = replace(session, expires_at_us=expires)
        elif graph.adjacent(session.beacon_id, new_login.beacon_id):
            moved = replace(session, beacon_id=new_login.beacon_id,
                            expires_at_us=expires, origin=Origin.TRAVELED,
                            traveled_from=session.beacon_id)
        else:
            raise TravelRejected(TravelRejectReason.NON_ADJACENT)

        with self._lock:
            self._sessions[session.username] = moved
        return moved

    def sweep_expired(self, clock: Clock) -> List[Session]:
        now = clock.now_us
        with self._lock:
            expired = [s for s in self._sessions.values()
                       if s.expires_at_us <= now]
            for session in expired:
                del self._sessions[session.username]
        return sorted(expired, key=lambda s: s.username)

    def __len__(self) -> int:
        return len(self._sessions)
