"""Batch image acquisition with caching, rate limiting and retries."""

from __future__ import annotations

import csv
import io
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import requests
from PIL import Image

from .dataset import GeoPoint
from .errors import ConfigError, DataError

SATELLITE_SIZE = (640, 640)
STREETVIEW_SIZE = (600, 400)
DEFAULT_FOV = 90.0
DEFAULT_ZOOM = 19


@dataclass(frozen=True)
class ImageRequest:
    kind: str
    id: str
    point: GeoPoint
    zoom: int = DEFAULT_ZOOM
    fov: float = DEFAULT_FOV
    heading: float | None = None

    def __post_init__(self):
        if self.kind not in ("satellite", "streetview"):
            raise DataError(f"unknown image kind {self.kind!r}")
        if not (0.0 < self.fov <= 120.0):
            raise DataError("fov must be in (0, 120]")

    @property
    def size(self):
        return SATELLITE_SIZE if self.kind == "satellite" else STREETVIEW_SIZE

    def url(self, template: str, key: str) -> str:
        w, h = self.size
        return template.format(
            kind=self.kind, id=self.id, lat=self.point.lat, lng=self.point.lng,
            zoom=self.zoom, fov=self.fov,
            heading="" if self.heading is None else self.heading,
            width=w, height=h, key=key,
        )


def read_manifest(path):
    """Fetch manifest CSV: id, kind, lat, lng[, heading]."""
    requests_out = []
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.DictReader(fh)
        need = {"id", "kind", "lat", "lng"}
        if r.fieldnames is None or not need.issubset(r.fieldnames):
            raise DataError(f"{path}: manifest needs columns id, kind, lat, lng")
        for row in r:
            heading = row.get("heading")
            requests_out.append(ImageRequest(
                kind=row["kind"], id=row["id"],
                point=GeoPoint(float(row["lat"]), float(row["lng"])),
                heading=float(heading) if heading else None,
            ))
    return requests_out


@dataclass
class FetchConfig:
    endpoint_template: str
    cache_dir: str
    api_key_env: str = "URBANTIER_API_KEY"
    rate_limit: float = 0.0       # requests per second; 0 = unlimited
    retries: int = 3
    backoff_base: float = 0.5     # seconds; doubles per retry
    crop_pixels: int = 20
    max_parallel: int = 4


@dataclass
class FetchLogEntry:
    id: str
    status: str                   # ok | cached | failed
    path: str = ""
    bytes: int = 0
    error: str = ""


class _RateLimiter:
    def __init__(self, per_second: float):
        self.interval = 1.0 / per_second if per_second > 0 else 0.0
        self.lock = threading.Lock()
        self.next_at = 0.0

    def wait(self):
        if self.interval == 0.0:
            return
        with self.lock:
            now = time.monotonic()
            delay = self.next_at - now
            self.next_at = max(now, self.next_at) + self.interval
        if delay > 0:
            time.sleep(delay)


def postprocess_image(data: bytes, crop_pixels: int) -> Image.Image:
    """Crop the bottom attribution strip and standardize to 8-bit RGB."""
    img = Image.open(io.BytesIO(data))
    img.load()
    if crop_pixels > 0 and img.height > crop_pixels:
        img = img.crop((0, 0, img.width, img.height - crop_pixels))
    return img.convert("RGB")


def fetch_images(manifest, config: FetchConfig, session=None):
    """Download every request, skipping warm cache entries.

    Failures retry up to ``config.retries`` times with exponential backoff,
    then are logged as failed without aborting the batch.  Cache writes go
    through a temp file and rename, so partial downloads never land.
    """
    key = os.environ.get(config.api_key_env, "")
    if "{key}" in config.endpoint_template and not key:
        raise ConfigError(
            f"API key required: set {config.api_key_env} for endpoint "
            f"{config.endpoint_template!r}")
    os.makedirs(config.cache_dir, exist_ok=True)
    limiter = _RateLimiter(config.rate_limit)
    own_session = session is None
    sess = session or requests.Session()

    def fetch_one(req: ImageRequest) -> FetchLogEntry:
        path = os.path.join(config.cache_dir, f"{req.kind}_{req.id}.png")
        if os.path.exists(path):
            return FetchLogEntry(req.id, "cached", path, os.path.getsize(path))
        url = req.url(config.endpoint_template, key)
        last_err = ""
        for attempt in range(config.retries):
            limiter.wait()
            try:
                resp = sess.get(url, timeout=30)
                if resp.status_code != 200:
                    last_err = f"HTTP {resp.status_code}"
                    raise IOError(last_err)
                img = postprocess_image(resp.content, config.crop_pixels)
                tmp = path + f".tmp.{os.getpid()}.{threading.get_ident()}"
                img.save(tmp, format="PNG")
                os.replace(tmp, path)
                return FetchLogEntry(req.id, "ok", path, os.path.getsize(path))
            except Exception as exc:
                last_err = str(exc)
                if attempt < config.retries - 1:
                    time.sleep(config.backoff_base * (2 ** attempt))
        return FetchLogEntry(req.id, "failed", error=last_err)

    try:
        if config.max_parallel > 1:
            with ThreadPoolExecutor(max_workers=config.max_parallel) as pool:
                log = list(pool.map(fetch_one, manifest))
        else:
            log = [fetch_one(r) for r in manifest]
    finally:
        if own_session:
            sess.close()
    return log


def write_fetch_log(log, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "status", "path", "bytes", "error"])
        for e in log:
            w.writerow([e.id, e.status, e.path, e.bytes, e.error])
