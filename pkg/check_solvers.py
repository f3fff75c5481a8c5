from solver_backends import BACKENDS, FEASIBLE, INFEASIBLE, IntegerProblem, available_backends, solve_problem
from type_elimination import DD_AVAILABLE

print("Available integer backends:")
for s in available_backends():
    print(f" - {s}")
print(f"BDD package (dd): {'yes' if DD_AVAILABLE else 'no, explicit engine only'}")

# x + y == 3 with x, y in 0..2 is feasible; x + y == 5 is not
for name in BACKENDS:
    print(f"\nTesting {name}...")
    try:
        prob = IntegerProblem()
        x, y = prob.add_var("x", 0, 2), prob.add_var("y", 0, 2)
        prob.add_constraint({x: 1, y: 1}, "==", 3)
        status, values, _ = solve_problem(prob, solver=name, time_limit=10)
        bad = IntegerProblem()
        x, y = bad.add_var("x", 0, 2), bad.add_var("y", 0, 2)
        bad.add_constraint({x: 1, y: 1}, "==", 5)
        bad_status, _, _ = solve_problem(bad, solver=name, time_limit=10)
        if status == FEASIBLE and bad_status == INFEASIBLE:
            print(f"{name} Works! {values}")
        else:
            print(f"{name} answered {status}/{bad_status}")
    except Exception as e:
        print(f"{name} Failed: {e}")
