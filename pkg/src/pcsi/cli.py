"""Command line interface: ``pcsi encode | channel | decode | analyze``.

Exit codes: 0 success, 1 usage or input error, 2 no valid data.
"""
from __future__ import annotations

import argparse
import logging
import sys
from collections import Counter
from pathlib import Path

from . import channel as ch
from . import framing as fr
from .image_model import ImageError
from .io import (
    STREAM_FORMATS,
    StreamError,
    guess_format,
    load_image,
    read_stream,
    save_image,
    write_stream,
)
from .pdp import PdpError, decode_pdp, packetize
from .pixel_sequence import PlanError, make_plan
from .reconstruction import ReceivedPixelSet, SolverConfig, reconstruct

log = logging.getLogger("pcsi")

EXIT_OK, EXIT_USAGE, EXIT_NO_DATA = 0, 1, 2

DEFAULT_BERS = (1e-5, 1e-4, 1e-3, 1e-2)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def cmd_encode(args) -> int:
    image = load_image(args.input)
    plan = make_plan(image.height, image.width, pdp_size=args.pdp_size,
                     bits=args.bits_per_channel, n_color=args.n_color,
                     n_grey=args.n_grey)
    n = plan.packets_per_pass if args.packets is None else args.packets
    ids = [(args.start_id + i) & 0xFFFF for i in range(n)]
    payloads = packetize(image, plan, args.image_id, ids)
    framing = fr.Framing(args.framing)
    source = args.callsign.upper()
    records = [fr.frame_pdp(p, framing, source=source, dest=args.dest)
               for p in payloads]
    fmt = "base91" if args.base91 else args.format
    write_stream(args.out, records, fmt)
    print(f"plan: {image.width}x{image.height} image, {plan.bits} bits/channel, "
          f"{plan.n_color} colour + {plan.n_grey} grey pixels per packet, "
          f"pdp {plan.pdp_len} bytes, {plan.packets_per_pass} packets per pass")
    print(f"wrote {len(records)} {framing.value} records to {args.out}")
    return EXIT_OK


def cmd_channel(args) -> int:
    try:
        model = ch.ChannelModel(ber=args.ber, loss=args.loss, seed=args.seed)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        records, rejected = read_stream(args.input, args.in_format)
    except StreamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_DATA
    result = ch.apply_channel(records, model)
    kept = [f for f, dropped in result if not dropped]
    corrupted = sum(1 for (f, d), orig in zip(result, records) if not d and f != orig)
    write_stream(args.out, kept, args.out_format)
    total = len(records)
    print(f"frames in: {total}  dropped: {total - len(kept)}  "
          f"corrupted: {corrupted}  intact: {len(kept) - corrupted}"
          + (f"  unreadable lines: {len(rejected)}" if rejected else ""))
    if total:
        print(f"survival: {(len(kept) - corrupted) / total:.4f}")
    return EXIT_OK


def _output_path(out: Path, image_id: int, multi: bool, step: int | None = None):
    if "{image_id}" in out.name:
        out = out.with_name(out.name.format(image_id=image_id))
    elif multi:
        out = out.with_name(f"{out.stem}_{image_id:03d}{out.suffix}")
    if step is not None:
        out = out.with_name(f"{out.stem}_p{step:05d}{out.suffix}")
    return out


def cmd_decode(args) -> int:
    try:
        records, rejected_lines = read_stream(args.input, args.format)
    except StreamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_DATA
    # KISS bodies carry no flags or checksum
    with_fcs = guess_format(args.input, args.format) != "kiss"
    reasons = Counter(rejected_lines)
    images: dict[int, ReceivedPixelSet] = {}
    progress: dict[int, int] = Counter()
    cfg = SolverConfig(C=args.c, max_iters=args.max_iters)
    out = Path(args.out)
    for rec in records:
        try:
            payload = decode_pdp(fr.extract_pdp(rec, args.framing, with_fcs=with_fcs))
            rx = images.get(payload.header.image_id)
            if rx is None:
                images[payload.header.image_id] = rx = ReceivedPixelSet.from_payload(payload)
            else:
                rx.add(payload)
        except (fr.FrameError, PdpError, ImageError, PlanError) as exc:
            reason = getattr(exc, "reason", "header")
            reasons[reason] += 1
            log.info("rejected record (%s): %s", reason, exc)
            continue
        iid = payload.header.image_id
        progress[iid] += 1
        if args.progressive and progress[iid] % args.progressive == 0:
            path = _output_path(out, iid, True, progress[iid])
            save_image(path, reconstruct(rx, cfg))
    accepted = sum(progress.values())
    print(f"records: {len(records) + len(rejected_lines)}  accepted: {accepted}  "
          f"rejected: {sum(reasons.values())}"
          + "".join(f"  {k}={v}" for k, v in sorted(reasons.items())))
    if not images:
        print("error: no valid packets in stream", file=sys.stderr)
        return EXIT_NO_DATA
    multi = len(images) > 1
    for iid, rx in sorted(images.items()):
        path = _output_path(out, iid, multi)
        save_image(path, reconstruct(rx, cfg))
        print(f"image {iid}: {rx.plan.cols}x{rx.plan.rows}, "
              f"{len(rx.packet_ids)} distinct packets, "
              f"{100 * rx.coverage():.1f}% of pixels sampled -> {path}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    bers = list(args.ber) if args.ber else []
    if args.loss is not None:
        try:
            lber = ch.ber_from_loss(args.loss)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        print(f"packet loss {args.loss:g}% -> ber {lber:.4e}")
        bers.insert(0, lber)
    if not bers:
        bers = list(DEFAULT_BERS)
    framings = ([fr.Framing.SSDV, fr.Framing.AX25] if args.framing == "both"
                else [fr.Framing(args.framing)])
    print(f"{'ber':>10}  {'framing':>7}  {'best pdp':>8}  {'efficiency':>10}")
    for ber in bers:
        for f in framings:
            x, eff = ch.optimal_pdp(ber, f)
            print(f"{ber:>10.3e}  {f.value:>7}  {x:>8d}  {eff:>10.4f}")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            n = ch.write_curves_csv(ch.efficiency_curves(bers, framings), fh)
        print(f"wrote {n} rows to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pcsi", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("encode", help="packetize an image")
    e.add_argument("--input", "-i", required=True)
    e.add_argument("--out", "-o", required=True)
    e.add_argument("--pdp-size", type=int, default=256)
    e.add_argument("--bits-per-channel", type=int, default=4)
    e.add_argument("--n-color", type=int)
    e.add_argument("--n-grey", type=int)
    e.add_argument("--image-id", type=int, default=0)
    e.add_argument("--framing", choices=[f.value for f in fr.Framing], default="ax25")
    e.add_argument("--base91", action="store_true", help="write base91 text lines")
    e.add_argument("--format", choices=STREAM_FORMATS)
    e.add_argument("--callsign", default="PCSI", help="source callsign")
    e.add_argument("--dest", default="PCSI", help="AX.25 destination")
    e.add_argument("--packets", type=int, help="default: one full pass")
    e.add_argument("--start-id", type=int, default=0)
    e.set_defaults(func=cmd_encode)

    c = sub.add_parser("channel", help="simulate a lossy channel")
    c.add_argument("--in", dest="input", required=True)
    c.add_argument("--out", "-o", required=True)
    c.add_argument("--ber", type=float, default=0.0)
    c.add_argument("--loss", type=float, default=0.0, help="packet drop probability")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--in-format", choices=STREAM_FORMATS)
    c.add_argument("--out-format", choices=STREAM_FORMATS)
    c.set_defaults(func=cmd_channel)

    d = sub.add_parser("decode", help="reconstruct images from a packet stream")
    d.add_argument("--in", dest="input", required=True)
    d.add_argument("--out", "-o", required=True)
    d.add_argument("--framing", choices=["auto", *(f.value for f in fr.Framing)],
                   default="auto")
    d.add_argument("--format", choices=STREAM_FORMATS)
    d.add_argument("--c", type=float, default=4.0, help="L1 weight")
    d.add_argument("--max-iters", type=int, default=500)
    d.add_argument("--progressive", type=int, metavar="K",
                   help="also write an image every K accepted packets")
    d.set_defaults(func=cmd_decode)

    a = sub.add_parser("analyze", help="framing efficiency curves")
    a.add_argument("--framing", choices=["ax25", "ssdv", "both"], default="both")
    a.add_argument("--ber", type=float, nargs="+")
    a.add_argument("--loss", type=float, help="packet loss percent")
    a.add_argument("--out", "-o", help="CSV output")
    a.set_defaults(func=cmd_analyze)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ImageError, PlanError, fr.FrameError, PdpError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
