"""Reference policies for the mining race environment."""

from __future__ import annotations

from volminer.simenv.env import EnvAction, EnvState


def honest_agent(state: EnvState) -> EnvAction:
    """Track the longest chain and publish immediately.

    Any own block is published the moment a decision is possible
    (override with a one-block lead over an empty public fork) and any
    honest block is adopted straight away, so no fork ever persists.
    """
    if state.l_a > state.l_h:
        return EnvAction("override")
    if state.l_h >= 1:
        return EnvAction("adopt", index=0)
    return EnvAction("wait")


def undercut_agent(state: EnvState, duration: float) -> EnvAction:
    """Restricted single-block undercutting policy.

    Whenever the public tip is honest, mine on its parent with a
    fee-capped block for at most `duration` minutes, then give up and
    fall back to the tip.  A successfully mined competing block is
    published at once (match); if honest miners extend the old tip
    instead, the attempt moves on to the new tip.  Own blocks mined on
    the public tip are published immediately.  A non-positive duration
    degenerates to honest behaviour.
    """
    if state.undercut_pending and state.l_h >= 1 and state.l_a >= state.l_h:
        return EnvAction("match")
    if state.l_a > state.l_h:
        return EnvAction("override")
    if state.l_h >= 1:
        if duration > 0:
            return EnvAction("undercut_block", duration=duration)
        return EnvAction("adopt", index=0)
    return EnvAction("wait")
