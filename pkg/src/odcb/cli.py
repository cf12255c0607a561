"""Command-line workflow: import, refine, generate, repl, serve.

Exit codes: 0 success, 1 usage error, 2 validation/domain failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from datetime import date
from pathlib import Path

from .botgen import bot_dumps, bot_from_doc, generate_bot
from .errors import ChatbotError, MalformedDescriptor
from .importers import CkanDescriptor, SocrataDescriptor, import_ckan, import_socrata
from .model import dumps, restore
from .refine import apply_script
from .runtime import ChatEngine, ChatService, MockOpenDataServer, RebasedTransport, UrlTransport


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); we want exit 1
        raise _UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="odcb", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_import = sub.add_parser("import", help="import an API description into a model")
    p_import.add_argument("--api", choices=["socrata", "ckan"], required=True)
    p_import.add_argument("--domain", required=True, help="API host (e.g. data.example.org)")
    p_import.add_argument("--dataset", required=True, help="dataset id / resource id")
    p_import.add_argument("--from", dest="from_dir", default=None,
                          help="read recorded descriptor documents from this fixtures dir "
                               "instead of fetching them")
    p_import.add_argument("--out", required=True)

    p_refine = sub.add_parser("refine", help="apply a refinement script to a model")
    p_refine.add_argument("--model", required=True)
    p_refine.add_argument("--script", required=True)
    p_refine.add_argument("--out", required=True)

    p_generate = sub.add_parser("generate", help="generate a bot definition from a model")
    p_generate.add_argument("--model", required=True)
    p_generate.add_argument("--out", required=True)
    p_generate.add_argument("--page-size", type=int, default=10)

    p_repl = sub.add_parser("repl", help="chat with a bot in the terminal")
    _add_runtime_options(p_repl)

    p_serve = sub.add_parser("serve", help="serve the chat API over HTTP")
    _add_runtime_options(p_serve)
    p_serve.add_argument("--port", type=int, default=8080)
    p_serve.add_argument("--host", default="127.0.0.1")

    return parser


def _add_runtime_options(parser) -> None:
    parser.add_argument("--bot", required=True, help="bot.json produced by generate")
    parser.add_argument("--fixtures", default=None,
                        help="serve recorded rows from this dir through a local mock API "
                             "instead of calling the live service")
    parser.add_argument("--today", default=None,
                        help="fix 'today' (YYYY-MM-DD) for reproducible relative dates")


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return _dispatch(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ChatbotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    sys.exit(run())


def _dispatch(args) -> int:
    if args.command == "import":
        return _cmd_import(args)
    if args.command == "refine":
        return _cmd_refine(args)
    if args.command == "generate":
        return _cmd_generate(args)
    if args.command == "repl":
        return _cmd_repl(args)
    if args.command == "serve":
        return _cmd_serve(args)
    raise _UsageError(f"unknown command {args.command!r}")


# --- descriptor loading ---

def _read_json(path: Path):
    try:
        return json.loads(path.read_text("utf-8"))
    except FileNotFoundError:
        raise MalformedDescriptor(f"missing descriptor document {path}")
    except json.JSONDecodeError as exc:
        raise MalformedDescriptor(f"{path} is not valid JSON: {exc}")


def _fetch_json(url: str):
    transport = UrlTransport()
    from .runtime.query import HttpRequestSpec

    return transport.fetch(HttpRequestSpec(url=url))


def _cmd_import(args) -> int:
    if args.api == "socrata":
        if args.from_dir:
            base = Path(args.from_dir) / "socrata" / args.dataset
            metadata = _read_json(base / "metadata.json")
            views = _read_json(base / "views.json")
        else:
            metadata = _fetch_json(f"https://{args.domain}/api/views/metadata/v1/{args.dataset}.json")
            views = _fetch_json(f"https://{args.domain}/api/views/{args.dataset}.json")
        model = import_socrata(SocrataDescriptor(
            metadata_doc=metadata, views_doc=views,
            domain=args.domain, dataset_id=args.dataset))
    else:
        if args.from_dir:
            base = Path(args.from_dir) / "ckan" / args.dataset
            resource = _read_json(base / "resource.json")
        else:
            resource = _fetch_json(
                f"https://{args.domain}/api/3/action/datastore_search"
                f"?resource_id={args.dataset}&limit=0")
        model = import_ckan(CkanDescriptor(
            resource_doc=resource, base_url=args.domain, resource_id=args.dataset))
    Path(args.out).write_text(dumps(model), "utf-8")
    print(f"wrote {args.out}")
    return 0


def _cmd_refine(args) -> int:
    model = restore(Path(args.model).read_text("utf-8"))
    script = json.loads(Path(args.script).read_text("utf-8"))
    refined = apply_script(model, script)
    Path(args.out).write_text(dumps(refined), "utf-8")
    print(f"wrote {args.out}")
    return 0


def _cmd_generate(args) -> int:
    model = restore(Path(args.model).read_text("utf-8"))
    bot = generate_bot(model, page_size=args.page_size)
    Path(args.out).write_text(bot_dumps(bot), "utf-8")
    print(f"wrote {args.out}")
    return 0


# --- runtime commands ---

def _load_engine(args) -> tuple[ChatEngine, MockOpenDataServer | None]:
    bot = bot_from_doc(Path(args.bot).read_text("utf-8"))
    today = date.fromisoformat(args.today) if args.today else None
    mock = None
    if args.fixtures:
        mock = MockOpenDataServer(args.fixtures)
        base = mock.start()
        transport = RebasedTransport(base)
    else:
        transport = UrlTransport()
    return ChatEngine(bot, transport=transport, today=today), mock


def _cmd_repl(args) -> int:
    engine, mock = _load_engine(args)
    session = engine.create_session()
    concept = engine.bot.model_ref.core_concept().bot.readable_name
    print(f"Chatting about {concept}. Type a message, a button number, or 'quit'.")
    buttons = [f"show me the list of {concept}"]
    _print_buttons(buttons)
    try:
        while True:
            try:
                line = input("> ").strip()
            except EOFError:
                break
            if not line:
                continue
            if line.lower() in ("quit", "exit"):
                break
            if line.isdigit() and buttons and 1 <= int(line) <= len(buttons):
                line = buttons[int(line) - 1]
                print(f"(you) {line}")
            _, response = engine.handle(session.id, line)
            for message in response.messages:
                print(message)
            if response.table is not None:
                _print_table(response.table)
            buttons = response.buttons
            _print_buttons(buttons)
    finally:
        if mock is not None:
            mock.stop()
    return 0


def _print_buttons(buttons) -> None:
    for index, label in enumerate(buttons, start=1):
        print(f"  [{index}] {label}")


def _print_table(table) -> None:
    widths = [len(h) for h in table.headers]
    for row in table.rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    line = " | ".join(h.ljust(widths[i]) for i, h in enumerate(table.headers))
    print(line)
    print("-+-".join("-" * w for w in widths))
    for row in table.rows:
        print(" | ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))


def _cmd_serve(args) -> int:
    port = args.port
    env_port = os.environ.get("ODCB_PORT")
    if env_port:
        try:
            port = int(env_port)
        except ValueError:
            raise _UsageError(f"ODCB_PORT must be an integer, got {env_port!r}")
    engine, mock = _load_engine(args)
    service = ChatService(engine, host=args.host, port=port)
    try:
        handler_base = service.start()
        print(f"chat service listening on {handler_base}", flush=True)
        if mock is not None:
            print(f"mock data API on {mock.base_url}", flush=True)
        service._thread.join()
    except KeyboardInterrupt:
        pass
    finally:
        service.stop()
        if mock is not None:
            mock.stop()
    return 0


if __name__ == "__main__":
    main()
