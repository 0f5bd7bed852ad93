"""Live session server: one simulator lane per connection over WebSocket.

Modes: ``observe`` streams states while the expert drives; in
``teleop_takeover`` the expert digs until the stall, control authority
switches to the human (takeover message), and incoming action messages drive
the lane until the episode ends. Completed episodes go to the dataset sink;
partial episodes from dropped connections are discarded.
"""

from __future__ import annotations

import logging
import socket
import threading
import time
import uuid

import numpy as np

from ..experts.collect import PolicyLaneExpert
from ..experts.dataset import ConfigRef, DatasetWriter, Episode
from ..nn.checkpoint import PolicyCheckpoint, policy_from_checkpoint
from ..simcore import BatchEnv, sample_task_config
from . import protocol, ws

log = logging.getLogger(__name__)


class Session:
    def __init__(self, sock, sid: str, mode: str, server: "TeleopServer", seed: int):
        self.sock = sock
        self.id = sid
        self.mode = mode
        self.server = server
        self.seed_stream = np.random.default_rng(np.uint64(seed))
        self.authority = "expert"
        self.env = BatchEnv()
        self.expert = PolicyLaneExpert(policy_from_checkpoint(server.expert_ckpt))
        self.last_human = np.zeros(5, dtype=np.float32)
        self.have_human = False
        self.clamped = False
        self.lock = threading.Lock()
        self.alive = True
        self.step = 0
        self._begin_episode()

    def _begin_episode(self) -> None:
        self.config = self.server.config_factory(int(self.seed_stream.integers(2**62)))
        self.obs = self.env.reset([self.config])
        self.expert.begin(self.env)
        self.authority = "expert"
        self.have_human = False
        self.last_human[:] = 0.0
        self.takeover_sent = False
        self.takeover_step = None
        self.rec = {"obs": [], "act": [], "rew": [], "st": []}

    # --- wire handling -----------------------------------------------------
    def on_message(self, msg: dict) -> None:
        if msg["type"] != "action":
            self._send(protocol.make("error", self.id, self.step,
                                     message=f"unexpected message type {msg['type']}"))
            return
        if self.authority != "human":
            self._send(protocol.make("error", self.id, self.step,
                                     message="action rejected: control authority is not yours",
                                     authority=self.authority))
            return
        vals = np.asarray(msg["payload"]["values"], dtype=np.float32)
        clamped = bool(np.any(np.abs(vals) > 1.0))
        with self.lock:
            self.last_human = np.clip(vals, -1.0, 1.0)
            self.have_human = True
            self.clamped = clamped

    def tick(self) -> None:
        env = self.env
        if self.authority == "expert":
            fed = self.obs.copy()
            fed[:, 0:3] = 0.0  # the dig expert drives with the dig encoding
            action = self.expert.act(env, fed)
        else:
            with self.lock:
                action = self.last_human.reshape(1, 5).copy()
        self.rec["obs"].append(self.obs[0].copy())
        obs, rew, done, info = env.step(action)
        self.expert.after_step(env, info)
        self.rec["act"].append(info["applied"][0].copy())
        self.rec["rew"].append(np.float32(rew[0]))
        self.rec["st"].append(np.uint8(env.status[0]))
        self.obs = obs
        self.step += 1
        if (self.mode == "teleop_takeover" and env.stalled_ever[0]
                and not self.takeover_sent):
            self.takeover_sent = True
            self.takeover_step = self.step - 1
            self.authority = "human"
            self._send(protocol.make("takeover", self.id, self.step,
                                     reason="stall detected"))
        self._send_state()
        if done[0]:
            self._finish_episode()

    def _send_state(self) -> None:
        env = self.env
        stalled = bool(env.stalled_ever[0])
        obstacle = None
        if stalled and self.config.obstacle is not None:
            obstacle = {"position": [float(x) for x in self.config.obstacle["position"]],
                        "extent": float(self.config.obstacle["extent"])}
        with self.lock:
            clamped = self.clamped
            self.clamped = False
        msg = protocol.make(
            "state", self.id, self.step,
            observation=[float(x) for x in self.obs[0]],
            joints=[float(x) for x in env.q[0]],
            terrain={"heights": [round(float(h), 4) for h in env.heights[0]],
                     "max_depth": [round(float(h), 4) for h in env.max_depth[0]],
                     "grid_r0": 0.5, "spacing": 0.1},
            fill=float(env.fill[0]),
            stall=stalled,
            authority=self.authority,
            obstacle=obstacle,
            status=env.status_names()[0],
            last_action_clamped=clamped,
        )
        self._send(msg)

    def _finish_episode(self) -> None:
        success = bool(self.env.status[0] == 1)
        recorded = False
        if self.server.writer is not None and self.rec["obs"]:
            ep = Episode(
                obs=np.stack(self.rec["obs"]), actions=np.stack(self.rec["act"]),
                rewards=np.array(self.rec["rew"], dtype=np.float32),
                status=np.array(self.rec["st"], dtype=np.uint8),
                config_ref=ConfigRef.for_config(self.config),
                success=success, takeover_step=self.takeover_step)
            with self.server.writer_lock:
                self.server.writer.append(ep)
            recorded = True
        self._send(protocol.make("episode_done", self.id, self.step,
                                 success=success,
                                 status=self.env.status_names()[0],
                                 steps=int(self.env.step_idx[0]),
                                 takeover_step=self.takeover_step,
                                 recorded=recorded))
        self.step = 0
        self._begin_episode()

    def _send(self, msg: dict) -> None:
        try:
            ws.send_text(self.sock, protocol.encode_message(msg))
        except OSError:
            self.alive = False


class TeleopServer:
    def __init__(self, host: str = "127.0.0.1", port: int = 8765,
                 task: str = "abort_reset", expert_ckpt: PolicyCheckpoint = None,
                 mode: str = "teleop_takeover", dataset_dir=None,
                 tick_hz: float = 10.0, seed: int = 0, config_factory=None):
        self.host, self.port = host, port
        self.task = task
        self.expert_ckpt = expert_ckpt
        self.mode = mode
        self.tick_hz = tick_hz
        self.seed = seed
        self.config_factory = config_factory or (lambda s: sample_task_config(task, s))
        self.writer = (DatasetWriter(dataset_dir, task=task, expert_kind="teleop",
                                     batch_seed=seed) if dataset_dir else None)
        self.writer_lock = threading.Lock()
        self.sessions: dict[str, Session] = {}
        self._threads: list[threading.Thread] = []
        self._stop = threading.Event()
        self.listener = socket.create_server((host, port))
        self.listener.settimeout(0.2)
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._accept_thread.start()

    @property
    def address(self) -> tuple[str, int]:
        return self.listener.getsockname()[:2]

    def _accept_loop(self) -> None:
        while not self._stop.is_set():
            try:
                sock, _ = self.listener.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            t = threading.Thread(target=self._handle, args=(sock,), daemon=True)
            t.start()
            self._threads.append(t)

    def _handle(self, sock: socket.socket) -> None:
        sid = uuid.uuid4().hex[:8]
        try:
            ws.server_handshake(sock)
            session = Session(sock, sid, self.mode, self,
                              seed=self.seed ^ int(sid, 16))
            self.sessions[sid] = session
            hello = protocol.make("hello", sid, 0, version=protocol.PROTOCOL_VERSION,
                                  mode=self.mode, task=self.task, tick_hz=self.tick_hz)
            ws.send_text(sock, protocol.encode_message(hello))
            reader = threading.Thread(target=self._read_loop, args=(session,), daemon=True)
            reader.start()
            period = 1.0 / self.tick_hz
            next_t = time.monotonic() + period
            while session.alive and not self._stop.is_set():
                now = time.monotonic()
                if now < next_t:
                    time.sleep(min(next_t - now, period))
                    continue
                next_t += period
                session.tick()
        except (ws.WSError, OSError) as e:
            log.info("session %s ended: %s", sid, e)
        finally:
            self.sessions.pop(sid, None)
            try:
                sock.close()
            except OSError:
                pass

    def _read_loop(self, session: Session) -> None:
        while session.alive and not self._stop.is_set():
            try:
                text = ws.recv_text(session.sock)
            except (ws.WSError, OSError):
                session.alive = False
                return
            if text is None:
                session.alive = False
                return
            try:
                msg = protocol.decode_message(text)
            except protocol.ProtocolError as e:
                session._send(protocol.make("error", session.id, session.step,
                                            message=str(e)))
                continue
            session.on_message(msg)

    def stop(self) -> None:
        self._stop.set()
        try:
            self.listener.close()
        except OSError:
            pass
        if self.writer is not None:
            with self.writer_lock:
                self.writer.finalize()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.stop()


def serve(host: str, port: int, task: str, expert_ckpt, **kw) -> TeleopServer:
    """Start a server; returns the running handle (stop() to shut down)."""
    return TeleopServer(host=host, port=port, task=task, expert_ckpt=expert_ckpt, **kw)
