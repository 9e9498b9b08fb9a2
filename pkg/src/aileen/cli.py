"""Command line entry point: ``aileen <subcommand> ...``."""

from __future__ import annotations

import argparse
import shlex
import sys
from pathlib import Path

from .agent import Agent, Demo, Lesson, Log
from .comprehension import SemanticMap
from .errors import AileenError
from .harness import (
    PHASES,
    TRAINER_TRUTH,
    aggregate,
    curve_csv,
    generate_trials,
    load_config,
    load_lessons,
    parse_lessons,
    run_phase,
    write_outputs,
)
from .qsr import ConstraintSet
from .sage import ConceptMemory, load_memory, save_memory


def _load_agent(path, must_exist: bool = True, sink=print) -> Agent:
    if path and (must_exist or Path(path).exists()):
        memory, lexicon = load_memory(path)
        return Agent(memory, SemanticMap(lexicon), Log(sink))
    return Agent(ConceptMemory(), SemanticMap(), Log(sink))


def cmd_run(args) -> int:
    phase = {"v": "visual", "s": "spatial", "a": "action"}.get(args.phase, args.phase)
    config = load_config(args.config, phase=phase, seed=args.seed, trials=args.trials,
                         workers=args.workers, memory=args.memory)
    if args.no_wall_time:
        config.wall_time = False
    trials = generate_trials(config)
    outcomes = run_phase(config, trials)
    paths = write_outputs(args.out, config, trials, outcomes)
    print(curve_csv(aggregate([o.rows for o in outcomes])), end="")
    for kind, path in paths.items():
        print(f"wrote {kind}: {path}")
    return 0


def cmd_exam(args) -> int:
    agent = _load_agent(args.memory)
    agent.set_explain(args.explain)
    lessons = load_lessons(args.lessons)
    hits = 0
    for i, lesson in enumerate(lessons):
        r = agent.handle(lesson)
        hits += r.success
        detail = "; ".join(r.diagnostics)
        print(f"{i}\t{lesson.signal}\t{r.status}\t{lesson.content}" + (f"\t{detail}" if detail else ""))
    print(f"success {hits}/{len(lessons)}")
    return 0


def cmd_react(args) -> int:
    agent = _load_agent(args.memory)
    agent.set_explain(args.explain)
    scene_text = Path(args.scene).read_text()
    parsed = parse_lessons(scene_text + "\ncontent: -\n") if "content:" not in scene_text else parse_lessons(scene_text)
    lesson = Lesson(parsed[0].scene, args.say, "react", seed=args.seed)
    r = agent.handle(lesson)
    print(f"{r.status}: {r.projections} projections, {len(r.actions)} actions")
    for d in r.diagnostics:
        print(d)
    return 0 if r.success else 1


def cmd_inspect(args) -> int:
    agent = _load_agent(args.memory)
    ctx = agent.memory.context(args.concept)
    print(f"{ctx.name}: {len(ctx.generalizations)} generalizations, {len(ctx.examples)} examples")
    for g in ctx.generalizations:
        print(f"generalization {g.gen_id} n={g.n}")
        for f, p in g.table():
            print(f"  {p:.3f}  {f}")
    for i, e in enumerate(ctx.examples):
        print(f"example {i}")
        for f in e:
            print(f"  {f}")
    return 0


def cmd_calibrate(args) -> int:
    from .percept import ColorModel, accuracy, calibrate_weights, generate_corpus, write_corpus

    fixtures = generate_corpus(args.n, args.seed)
    w1, w2 = calibrate_weights(fixtures, args.seed)
    test = generate_corpus(args.test, args.seed + 1)
    print(f"w1={w1:.2f} w2={w2:.2f}")
    print(f"accuracy calibrated={accuracy(test, ColorModel(w1, w2)):.4f} "
          f"even={accuracy(test, ColorModel()):.4f} on {len(test)} crops")
    if args.dump:
        print(f"wrote {write_corpus(args.dump, args.test, args.seed + 1)}")
    return 0


REPL_HELP = """commands:
  scene (shape color [x y]) ...   set up the table
  demo <mover> <anchor> <relation words>   demonstrate before the next inform
  inform "<utterance>" | verify "<utterance>" | react "<utterance>"
  save [file] | explain on|off | help | quit"""


def repl(agent: Agent, memory_path, lines, out=print) -> int:
    scene: tuple = ()
    demo = None
    seed = 0
    for raw in lines:
        try:
            words = shlex.split(raw)
        except ValueError as err:
            out(f"error: {err}")
            continue
        if not words:
            continue
        cmd, rest = words[0], words[1:]
        try:
            if cmd in ("quit", "exit"):
                break
            elif cmd == "help":
                out(REPL_HELP)
            elif cmd == "scene":
                text = " ".join(rest).replace(")(", ")\n(").replace(") (", ")\n(")
                scene = parse_lessons(text + "\ncontent: -\n")[0].scene
                out(f"scene with {len(scene)} objects")
            elif cmd == "demo":
                mover, anchor, *rel = rest
                words_ = " ".join(rel)
                goal = TRAINER_TRUTH[words_] if words_ in TRAINER_TRUTH else ConstraintSet.of(*rel)
                demo = Demo(mover, anchor, goal)
                out(f"demonstration armed: {mover} {goal} {anchor}")
            elif cmd in ("inform", "verify", "react"):
                seed += 1
                lesson = Lesson(scene, " ".join(rest), cmd, demo if cmd != "react" else None, seed)
                if cmd == "inform":
                    demo = None
                r = agent.handle(lesson)
                out(f"{r.status} creates={r.creates} stores={r.stores} projections={r.projections}")
                for d in r.diagnostics:
                    out(f"  {d}")
            elif cmd == "save":
                path = rest[0] if rest else memory_path
                if not path:
                    out("error: no memory file given")
                    continue
                save_memory(path, agent.memory, agent.smap.as_dict())
                out(f"saved {path}")
            elif cmd == "explain":
                agent.set_explain(rest[:1] == ["on"])
                out(f"explain {'on' if agent.memory.explain else 'off'}")
            else:
                out(f"unknown command {cmd!r}; try help")
        except (AileenError, ValueError, KeyError) as err:
            out(f"error: {err}")
    return 0


def cmd_repl(args) -> int:
    agent = _load_agent(args.memory, must_exist=False)

    def lines():
        interactive = sys.stdin.isatty()
        while True:
            try:
                yield input("aileen> " if interactive else "")
            except EOFError:
                return

    return repl(agent, args.memory, lines())


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aileen", description="Analogical concept learning on a simulated tabletop.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run learning-curve trials for one phase")
    r.add_argument("--phase", required=True, choices=["v", "s", "a", *PHASES])
    r.add_argument("--config", help="key = value config file")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--seed", type=int)
    r.add_argument("--trials", type=int)
    r.add_argument("--workers", type=int)
    r.add_argument("--memory", help="prerequisite memory file instead of bootstrapping")
    r.add_argument("--no-wall-time", action="store_true", help="write ms=0 for byte-stable CSVs")
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("exam", help="run lessons from a file against a memory")
    e.add_argument("--memory", required=True)
    e.add_argument("--lessons", required=True)
    e.add_argument("--explain", action="store_true")
    e.set_defaults(func=cmd_exam)

    a = sub.add_parser("react", help="perform an action utterance in a scene")
    a.add_argument("--memory", required=True)
    a.add_argument("--scene", required=True)
    a.add_argument("--say", required=True)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--explain", action="store_true")
    a.set_defaults(func=cmd_react)

    i = sub.add_parser("repl", help="interactive trainer loop")
    i.add_argument("--memory")
    i.set_defaults(func=cmd_repl)

    c = sub.add_parser("calibrate-colors", help="grid-search the color scoring weights")
    c.add_argument("--n", type=int, default=100)
    c.add_argument("--test", type=int, default=500)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--dump", help="directory for a PPM corpus and manifest")
    c.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("inspect", help="print a concept's generalizations")
    s.add_argument("--memory", required=True)
    s.add_argument("--concept", required=True)
    s.set_defaults(func=cmd_inspect)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (AileenError, OSError, RuntimeError) as err:
        print(f"aileen: error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
