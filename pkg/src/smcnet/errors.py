"""Exception types raised across the package.

Grouped by the layer that raises them; everything derives from SmcError so
daemons can catch the whole family at activity boundaries.
"""


class SmcError(Exception):
    """Base class for all package errors."""

    #: short machine-readable code used in error frames / client responses
    code = "error"

    def __init__(self, message: str = "", **details):
        super().__init__(message or self.__doc__)
        self.details = details


# --- field / secret sharing -------------------------------------------------

class InvalidThreshold(SmcError):
    """Threshold must satisfy 1 <= t < n."""
    code = "invalid_threshold"


class InsufficientShares(SmcError):
    """Fewer than t+1 shares supplied for reconstruction."""
    code = "insufficient_shares"


class DuplicateIndex(SmcError):
    """Two shares carry the same evaluation index."""
    code = "duplicate_index"


class IndexMismatch(SmcError):
    """Share vectors do not cover the same index set."""
    code = "index_mismatch"


# --- framing / transport ----------------------------------------------------

class FrameTooLarge(SmcError):
    """Frame payload exceeds the 1 MiB cap."""
    code = "frame_too_large"


class MalformedJson(SmcError):
    """Frame payload is not valid UTF-8 JSON of the expected shape."""
    code = "malformed_json"


class UnknownType(SmcError):
    """Frame 'type' is not one of the enumerated message types."""
    code = "unknown_type"


class FingerprintMismatch(SmcError):
    """Presented key fingerprint differs from the pinned one (possible impersonation)."""
    code = "fingerprint_mismatch"


class HandshakeTimeout(SmcError):
    """Remote side did not complete the channel handshake in time."""
    code = "handshake_timeout"


class Refused(SmcError):
    """Remote endpoint refused the connection."""
    code = "refused"


class ChannelClosed(SmcError):
    """Operation on a channel that is already closed."""
    code = "channel_closed"


class SocketUnavailable(SmcError):
    """Could not bind or use the requested socket."""
    code = "socket_unavailable"


# --- SMC engine / adapter ---------------------------------------------------

class OutOfOrderMessage(SmcError):
    """Round message arrived more than one round ahead of the barrier."""
    code = "out_of_order_message"


class UnknownSender(SmcError):
    """Round message from a fingerprint that is not in the plan."""
    code = "unknown_sender"


class DuplicateMessage(SmcError):
    """Round message repeats one already recorded for that sender and round."""
    code = "duplicate_message"


class ChannelEstablishmentFailed(SmcError):
    """Pairwise channels could not all be established; names the unreachable peers."""
    code = "channel_establishment_failed"

    def __init__(self, unreachable, message: str = ""):
        self.unreachable = sorted(unreachable)
        super().__init__(message or f"unreachable peers: {', '.join(self.unreachable)}",
                         unreachable=self.unreachable)


class AdapterUnreachable(SmcError):
    """The local SMC instance endpoint cannot be reached."""
    code = "adapter_unreachable"


class AdapterProtocolError(SmcError):
    """The adapter returned a malformed or out-of-contract reply."""
    code = "adapter_protocol_error"


# --- discovery / pairing ----------------------------------------------------

class NoCandidates(SmcError):
    """Gateway selection ran with an empty candidate list."""
    code = "no_candidates"


class ManualTargetAbsent(SmcError):
    """Manually selected gateway fingerprint is not among the candidates."""
    code = "manual_target_absent"


class MetadataRejected(SmcError):
    """Peer metadata is unusable (e.g. no capabilities)."""
    code = "metadata_rejected"


class UnknownParticipant(SmcError):
    """Session names a fingerprint that is not in the registry."""
    code = "unknown_participant"


# --- daemon / gateway -------------------------------------------------------

class IllegalTransition(SmcError):
    """Event is not legal in the current peer state (daemon bug, not environment)."""
    code = "illegal_transition"


class CapabilityMissing(SmcError):
    """Peer lacks a data source for the requested data type."""
    code = "capability_missing"


class GroupTooSmall(SmcError):
    """Fewer than the minimum number of contributing peers."""
    code = "group_too_small"


class UnsupportedOperation(SmcError):
    """Requested operation is not one the engine supports."""
    code = "unsupported_operation"


class UnknownGroup(SmcError):
    """No group matches the requested label and data type."""
    code = "unknown_group"


class PrepareTimeout(SmcError):
    """Not all participants acknowledged session prepare in time."""
    code = "prepare_timeout"


class SessionFailed(SmcError):
    """Retry budget exhausted or group shrank below the minimum."""
    code = "session_failed"


# --- harness ------------------------------------------------------------------

class ScenarioSetupFailed(SmcError):
    """Benchmark scenario could not be brought up."""
    code = "scenario_setup_failed"
