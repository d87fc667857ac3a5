"""Frozen oracle values; regenerate with ``python3 -m tests.make_frozen_oracles``.

Sources (all seeded, see the generator module):
- BVN_MC: stratified 1e8-sample MC of the bivariate normal CDF on the
  seeded 5x5x5 grid (standard error < 1e-6 per point).
- RE_P: 1e6-run direct MC of P[theta(T) >= 0.23] at the default task spec.
- UP_MEAN, UP_VAR: 1e5-run direct MC of E/Var of theta(T), defaults.
- SA_FIRST, SA_TOTAL: direct pick-freeze Sobol indices at n = 1e5
  ((3+2)*1e5 = 5e5 pendulum solves), defaults.
"""

BVN_GRID_H = [-1.204271264624, -1.101985331088497, -0.8918776380908555, -0.40779738329086834, 0.9227715413890616]

BVN_GRID_K = [-1.958354287013796, -1.8088441900104846, -1.7775760261311901, 0.42747126988496564, 0.44424775207491596]

BVN_GRID_RHO = [-0.6165973100367041, -0.12350877156473761, -0.050153530051082806, 0.28587494517155565, 0.8059820026154232]

BVN_MC = [[[1.3141101085320993e-05, 2.6812723733440172e-05, 3.099557813516883e-05, 0.026215712386707064, 0.02692997864015555], [2.0505453072064838e-05, 4.128282846966387e-05, 4.759039637983837e-05, 0.033766297875915466, 0.03464844701674341], [4.8735116016605055e-05, 9.548233006896873e-05, 0.00010944965505870501, 0.05453275073387968, 0.05583718744263841], [0.00028070990330321437, 0.0005173628518364776, 0.0005855615016121167, 0.13497916823548936, 0.13759563900703528], [0.006603868175514615, 0.010478588198468556, 0.011498793371982419, 0.4970982107465182, 0.5027883131332258]], [[0.0016666671629987527, 0.002415995833732637, 0.002604435758537038, 0.0670688163574195, 0.0678184199572378], [0.0020263867424248046, 0.0029332028726454444, 0.0031610344183402124, 0.07993850936223407, 0.08082362541606787], [0.0029440622850213666, 0.004249140776731981, 0.0045764151138593615, 0.11158769221463004, 0.11280002003375657], [0.006063285501377426, 0.008695378429886724, 0.0093527019973618, 0.2106851228110302, 0.21288018158764357], [0.018530341127060045, 0.02620644731465448, 0.028106234320142212, 0.5355480487197597, 0.5406451290979915]], [[0.002332006876956011, 0.003313574706934865, 0.0035572676340582966, 0.07245328597380502, 0.0731728542149587], [0.002788790603788886, 0.003960391076554619, 0.004251155702226151, 0.08597959432248684, 0.08683010680954283], [0.0039198040429573805, 0.005560242960180532, 0.005967059640354412, 0.11899048740635217, 0.12015813398006041], [0.007518094739116106, 0.010638081694711334, 0.01141056045805199, 0.22066747816482934, 0.22279522328005202], [0.019824745812441445, 0.02790514126481582, 0.02989890044126633, 0.5422718985412655, 0.5473106914756892]], [[0.007246005630525438, 0.009713698202004734, 0.010301532436902933, 0.09450186161503105, 0.09500558154082377], [0.008181766680348373, 0.011000732905898248, 0.01167366213411038, 0.11098381943358185, 0.11159412648509467], [0.010237653309310635, 0.013846256285980836, 0.014711293383536165, 0.15030331707212882, 0.15118222652250612], [0.015215773797850572, 0.02083330432730465, 0.02219172183272296, 0.26497112660848876, 0.26673163486154394], [0.02385752396434516, 0.03335377199196897, 0.035685316691498964, 0.5757478222014119, 0.5806021556841224]], [[0.02139249740583984, 0.028493493142446508, 0.030137666086523806, 0.11391377100422792, 0.11393992118610168], [0.022254929331848666, 0.029934727028570425, 0.03173126774929116, 0.13467369970040408, 0.13471656870067084], [0.023561912615830953, 0.03221896305909142, 0.03428053955583978, 0.18468275067511972, 0.18479145353840992], [0.02484336531091076, 0.03467338523793543, 0.037072625903064066, 0.3309743505223947, 0.3315821582926531], [0.025094166023093833, 0.0352373569552334, 0.037736107820578554, 0.6411137418638557, 0.6461827661431732]]]

RE_P = 0.001277

UP_MEAN = 0.1997257381558084
UP_VAR = 9.96015465453338e-05

SA_FIRST = [1.0221196396030703, -0.0002055740203898142, 0.001740399828207571]
SA_TOTAL = [0.9731637897556984, 0.0013158915478804767, -0.0011380315225282267]
