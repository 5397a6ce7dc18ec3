from src.main.app import cli


def create_app():
    from src.main.command.solve import solve_cmd
    cli.add_command(solve_cmd)

    from src.main.command.gen import gen_group
    cli.add_command(gen_group)

    from src.main.command.bench import bench_cmd
    cli.add_command(bench_cmd)

    return cli


if __name__ == '__main__':
    app = create_app()
    app()
